#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dslc/flash.hpp"
#include "dslc/retention.hpp"
#include "dslc/trace.hpp"

namespace dslc::ftl {

enum class Policy { Baseline, Dslc, Oracle };

std::string_view policy_name(Policy p);
Policy parse_policy(std::string_view name);

struct PhysLoc {
  std::uint32_t chip = kUnmapped;
  std::uint32_t block = 0;
  std::uint32_t page = 0;

  static constexpr std::uint32_t kUnmapped = 0xFFFFFFFFu;
  bool mapped() const { return chip != kUnmapped; }
  friend bool operator==(PhysLoc, PhysLoc) = default;
};

class MappingTable {
 public:
  explicit MappingTable(std::uint64_t logical_pages = 0) : loc_(logical_pages) {}

  std::uint64_t size() const { return loc_.size(); }
  const PhysLoc& at(std::uint64_t lpn) const { return loc_.at(lpn); }
  void set(std::uint64_t lpn, PhysLoc loc);
  void clear(std::uint64_t lpn);
  std::uint64_t mapped_count() const { return mapped_; }

 private:
  std::vector<PhysLoc> loc_;
  std::uint64_t mapped_ = 0;
};

/// Future write times per LPN. With a loop period, the stream repeats every `period`
/// microseconds for `epochs` epochs (the lifetime-run replay).
class OracleIndex {
 public:
  static OracleIndex build(std::span<const trace::PageOp> stream);
  static OracleIndex build_looped(std::span<const trace::PageOp> base_epoch, Micros period, std::uint64_t epochs);

  /// Smallest recorded write time strictly after t, or kNever.
  Micros next_write(std::uint64_t lpn, Micros t) const;

 private:
  std::unordered_map<std::uint64_t, std::vector<Micros>> writes_;
  Micros first_ = 0;
  Micros period_ = 0;
  std::uint64_t epochs_ = 1;
};

struct FtlCounters {
  std::uint64_t gc_invocations = 0;
  std::uint64_t gc_page_migrations = 0;
  std::uint64_t erases = 0;
  std::uint64_t round_transitions = 0;
  std::uint64_t scrub_invocations = 0;
  std::uint64_t scrub_page_migrations = 0;
  std::uint64_t host_pages_written = 0;
  std::uint64_t total_pages_written = 0;
  std::uint64_t host_pages_read = 0;
  std::uint64_t cold_reads = 0;
  std::uint64_t blocks_allocated = 0;
  std::uint64_t retired_blocks = 0;
  std::uint64_t integrity_violations = 0;
  /// Host reads/writes plus page migrations; each one checked against its block deadline.
  std::uint64_t page_events = 0;
};

std::string counters_csv_header();
std::string counters_csv_row(const FtlCounters& c);

/// Per-mode record of page writes absorbed by a block between two erases.
struct PweLawStats {
  std::array<std::uint64_t, 9> max_writes_per_cycle{};
  std::array<std::uint64_t, 9> completed_cycles{};
  std::array<std::uint64_t, 9> saturated_cycles{};
  std::uint64_t violations = 0;
};

class DeviceDead : public std::runtime_error {
 public:
  DeviceDead(std::uint32_t chip, const std::string& why, const FtlCounters& totals);
  std::uint32_t chip() const { return chip_; }
  const FtlCounters& totals() const { return totals_; }

 private:
  std::uint32_t chip_;
  FtlCounters totals_;
};

class IntegrityFault : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Ftl {
 public:
  /// The oracle index must outlive the FTL; it is required for Policy::Oracle.
  Ftl(const flash::DeviceConfig& cfg, retention::ModeAssignmentTable table, Policy policy,
      const OracleIndex* oracle = nullptr);

  /// Throws IntegrityFault on a read past its block deadline instead of counting it.
  void set_strict_integrity(bool strict) { strict_ = strict; }

  std::uint32_t chip_of(std::uint64_t lpn) const { return static_cast<std::uint32_t>(lpn % cfg_.chips); }

  double handle_write(std::uint64_t lpn, Micros now);
  double handle_read(std::uint64_t lpn, Micros now);

  /// Moves valid pages out of blocks whose deadline falls before the next check.
  std::uint64_t scrub_expired(Micros now);

  /// Opens a block for `mode` on `chip` and makes it the mode's active block.
  std::uint32_t activate_block(std::uint32_t chip, retention::StateMode mode, Micros now);

  std::optional<std::uint32_t> select_gc_victim(std::uint32_t chip) const;

  /// One greedy GC invocation; false when no victim can be reclaimed.
  bool run_gc(std::uint32_t chip, Micros now);

  /// Mode the policy would write `lpn` to at `now`.
  retention::StateMode target_mode(std::uint64_t lpn, Micros now) const;

  const flash::FlashArray& device() const { return flash_; }
  flash::FlashArray& device() { return flash_; }
  const MappingTable& mapping() const { return map_; }
  const FtlCounters& counters() const { return counters_; }
  const PweLawStats& pwe_stats() const { return pwe_; }
  const retention::ModeAssignmentTable& table() const { return table_; }
  Policy policy() const { return policy_; }
  const flash::DeviceConfig& config() const { return cfg_; }

  std::optional<std::uint32_t> active_block(std::uint32_t chip, retention::StateMode mode) const;
  /// Clean blocks plus emptied blocks waiting for reuse in their mode.
  std::uint32_t free_blocks(std::uint32_t chip) const { return chips_.at(chip).free_count; }
  bool gc_candidate(std::uint32_t chip, std::uint32_t block) const;

  /// Full structural audit; returns a description of the first broken invariant, if any.
  std::optional<std::string> audit() const;

 private:
  struct ChipState {
    std::array<std::int32_t, 9> active;
    std::vector<std::uint8_t> pooled;
    std::uint32_t free_count = 0;
    std::uint32_t retired = 0;
    ChipState() { active.fill(-1); }
  };

  flash::BlockId bid(std::uint32_t chip, std::uint32_t block) const { return {chip, block}; }
  std::uint32_t writable_active(std::uint32_t chip, retention::StateMode mode, Micros now, bool allow_gc);
  std::uint32_t activate(std::uint32_t chip, retention::StateMode mode, Micros now, bool allow_gc);
  std::optional<std::uint32_t> pick_block(std::uint32_t chip, retention::StateMode mode) const;
  std::uint64_t candidate_pe(std::uint32_t chip, retention::StateMode mode) const;
  bool gc_feasible(std::uint32_t chip, std::uint32_t victim) const;
  void background_gc(std::uint32_t chip, Micros now);
  void migrate_page(std::uint32_t chip, std::uint32_t src_block, std::uint32_t page, retention::StateMode dest,
                    Micros now, bool allow_gc, bool scrub);
  void check_deadline(const flash::Block& b, Micros now);
  void release_active(std::uint32_t chip, std::uint32_t block);
  void note_cycle_end(const flash::Block& b);
  Micros capacity_for(retention::StateMode mode, std::uint32_t pe) const;
  void index_deadline(const flash::Block& b);
  void unindex_deadline(const flash::Block& b);
  std::uint32_t gc_reserve(std::uint32_t chip) const;
  [[noreturn]] void die(std::uint32_t chip, const std::string& why) const;

  flash::DeviceConfig cfg_;
  retention::ModeAssignmentTable table_;
  Policy policy_;
  const OracleIndex* oracle_;
  flash::FlashArray flash_;
  MappingTable map_;
  std::vector<ChipState> chips_;
  FtlCounters counters_;
  PweLawStats pwe_;
  std::set<std::pair<Micros, std::uint64_t>> deadlines_;
  std::optional<flash::BlockId> scrubbing_;
  Micros scrub_period_;
  bool strict_ = true;
};

}  // namespace dslc::ftl
