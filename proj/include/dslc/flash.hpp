#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dslc/retention.hpp"
#include "dslc/units.hpp"

namespace dslc::flash {

/// Device geometry, timing and FTL knobs. Defaults follow the 64 GB SLC reference device.
struct DeviceConfig {
  std::uint32_t chips = 8;
  std::uint32_t blocks_per_chip = 8192;
  std::uint32_t pages_per_block = 128;
  std::uint32_t page_size_bytes = 8192;
  std::uint32_t endurance = 50000;
  double read_us = 35.0;
  double write_us = 350.0;
  double erase_us = 1500.0;
  double transfer_mb_s = 200.0;
  double gc_clean_threshold = 0.05;
  double scrub_period_s = 60.0;
  double overprovision = 0.10;
  /// Dummy write cost in units of (pages_per_block * write_us).
  double dummy_write_multiplier = 1.0;

  /// Empty when valid; otherwise one "field: problem" line per violation.
  std::vector<std::string> violations() const;
  void validate() const;

  std::uint64_t physical_pages() const {
    return std::uint64_t{chips} * blocks_per_chip * pages_per_block;
  }
  std::uint64_t logical_pages() const;
  Micros scrub_period() const;
};

/// Named geometries: "paper" (defaults) and two desk-scale devices.
DeviceConfig scaled_config(const std::string& scale);

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Simulator invariant broken (out-of-order program, double invalidate, ...).
class FlashFault : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class PageState : std::uint8_t { Free, Valid, Invalid };

struct BlockId {
  std::uint32_t chip = 0;
  std::uint32_t index = 0;
  friend bool operator==(BlockId, BlockId) = default;
};

class Block {
 public:
  Block(BlockId id, std::uint32_t pages);

  BlockId id() const { return id_; }
  std::uint32_t pages() const { return static_cast<std::uint32_t>(lpn_.size()); }
  std::uint32_t pe_count() const { return pe_count_; }
  bool is_clean() const { return states_ == 0 && !retired_; }
  bool retired() const { return retired_; }
  /// 0 while Clean.
  int states() const { return states_; }
  retention::StateMode mode() const;
  int round() const { return round_; }
  std::uint32_t write_ptr() const { return write_ptr_; }
  std::uint32_t valid_count() const { return valid_; }
  bool full() const { return write_ptr_ == pages(); }
  /// No further programs in this round (full, or closed early).
  bool sealed() const { return sealed_ || full(); }
  bool all_free() const { return write_ptr_ == 0; }
  Micros round_start() const { return round_start_; }
  Micros deadline() const { return deadline_; }
  Micros capacity() const { return capacity_; }
  std::uint32_t writes_this_cycle() const { return writes_this_cycle_; }

  PageState page_state(std::uint32_t page) const;
  std::uint64_t page_lpn(std::uint32_t page) const;

  /// Opens a round for programming: a Clean block enters `mode` at round 1; an all-Free
  /// block keeps its mode and round. `capacity` is the retention the round must honor.
  void open(retention::StateMode mode, Micros capacity);

  void program(std::uint32_t page, std::uint64_t lpn, Micros now);
  void invalidate(std::uint32_t page);
  /// Moves to the next round without erasing; every page becomes Free.
  void dummy_write();
  /// Returns false (and retires the block) when the block is at its endurance limit.
  bool erase(std::uint32_t endurance);
  void seal() { sealed_ = true; }

 private:
  static constexpr std::uint32_t kFreeSlot = 0xFFFFFFFFu;
  static constexpr std::uint32_t kInvalidSlot = 0xFFFFFFFEu;

  BlockId id_;
  std::vector<std::uint32_t> lpn_;
  std::uint32_t pe_count_ = 0;
  int states_ = 0;
  int round_ = 0;
  std::uint32_t write_ptr_ = 0;
  std::uint32_t valid_ = 0;
  std::uint32_t writes_this_cycle_ = 0;
  bool sealed_ = false;
  bool retired_ = false;
  Micros round_start_ = 0;
  Micros deadline_ = kNever;
  Micros capacity_ = kNever;
};

enum class OpClass : int { Read = 0, Write = 1, Erase = 2, DummyWrite = 3, Transfer = 4 };

/// Busy time per chip, split by operation class.
class LatencyLedger {
 public:
  explicit LatencyLedger(std::uint32_t chips = 0) : busy_(chips) {}

  void add(std::uint32_t chip, OpClass cls, double us) { busy_.at(chip)[static_cast<int>(cls)] += us; }
  double component(std::uint32_t chip, OpClass cls) const { return busy_.at(chip)[static_cast<int>(cls)]; }
  double total(std::uint32_t chip) const;
  double max_chip_total() const;
  double sum_component(OpClass cls) const;
  std::uint32_t chips() const { return static_cast<std::uint32_t>(busy_.size()); }

 private:
  std::vector<std::array<double, 5>> busy_;
};

/// Device latency plus bytes over the chip interface; returns the microseconds charged.
double op_latency(LatencyLedger& ledger, const DeviceConfig& cfg, std::uint32_t chip, OpClass kind,
                  std::uint64_t bytes);

/// All chips of one device with timing applied to every physical operation.
class FlashArray {
 public:
  explicit FlashArray(const DeviceConfig& cfg);

  const DeviceConfig& config() const { return cfg_; }
  Block& block(BlockId id) { return chips_.at(id.chip).at(id.index); }
  const Block& block(BlockId id) const { return chips_.at(id.chip).at(id.index); }
  std::vector<Block>& chip(std::uint32_t c) { return chips_.at(c); }
  const std::vector<Block>& chip(std::uint32_t c) const { return chips_.at(c); }
  LatencyLedger& ledger() { return ledger_; }
  const LatencyLedger& ledger() const { return ledger_; }

  double program_page(BlockId id, std::uint32_t page, std::uint64_t lpn, Micros now);
  double read_page(std::uint32_t chip);
  void invalidate(BlockId id, std::uint32_t page) { block(id).invalidate(page); }
  double dummy_write(BlockId id);
  /// Erase latency, or 0 when the block retires instead.
  double erase_block(BlockId id);

 private:
  DeviceConfig cfg_;
  std::vector<std::vector<Block>> chips_;
  LatencyLedger ledger_;
};

}  // namespace dslc::flash
