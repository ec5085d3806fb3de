#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dslc/flash.hpp"
#include "dslc/ftl.hpp"
#include "dslc/retention.hpp"
#include "dslc/trace.hpp"

namespace dslc::engine {

inline constexpr std::array<int, 5> kSnapshotStates = {2, 4, 5, 6, 8};

struct PweSnapshot {
  double time_hours = 0.0;
  /// Fraction of non-Clean blocks per state count, in kSnapshotStates order.
  std::array<double, 5> fractions{};
  bool empty = true;

  double fraction(int states) const;
};

PweSnapshot snapshot_pwe(const flash::FlashArray& device, Micros now);

struct RunOptions {
  /// Upper bound on replayed epochs in a lifetime run; hitting it marks the report truncated.
  std::uint64_t epoch_limit = 100000;
  /// Snapshot cadence as a fraction of the run (erase budget for lifetime runs, span otherwise).
  double snapshot_fraction = 0.01;
  /// Throw on a read past its deadline rather than counting it.
  bool strict_integrity = true;
};

struct SimReport {
  std::string policy;
  std::string table;
  double lifetime_kb_written = 0.0;
  double gc_rate = 0.0;
  double gc_cost = 0.0;
  double scrub_rate = 0.0;
  double scrub_cost = 0.0;
  double throughput_kb_s = 0.0;
  double host_kb_transferred = 0.0;
  double elapsed_s = 0.0;
  double busy_s = 0.0;
  std::uint64_t epochs = 0;
  bool device_dead = false;
  bool truncated = false;
  std::string death_cause;
  /// First broken structural invariant found after the run; empty when sound.
  std::string audit_failure;
  ftl::FtlCounters counters;
  ftl::PweLawStats pwe_law;
  std::vector<PweSnapshot> pwe_timeline;
};

/// Replays one pass of the trace. DeviceDead marks the report truncated.
SimReport run_trace(const flash::DeviceConfig& cfg, const retention::ModeAssignmentTable& table, ftl::Policy policy,
                    std::span<const trace::IORequest> trace, const RunOptions& opts = {});

/// Loops the trace epoch after epoch until the device dies.
SimReport run_until_death(const flash::DeviceConfig& cfg, const retention::ModeAssignmentTable& table,
                          ftl::Policy policy, std::span<const trace::IORequest> trace, const RunOptions& opts = {});

/// Page ops with LPNs renumbered densely (first-touch order) when any exceeds the logical capacity.
/// Throws std::invalid_argument when the distinct LPNs do not fit.
std::vector<trace::PageOp> fit_to_device(std::vector<trace::PageOp> ops, std::uint64_t logical_pages);

std::string report_csv_header();
std::string report_csv_row(const SimReport& r);
void write_report_csv(std::ostream& out, const SimReport& r);
void write_timeline_csv(std::ostream& out, const SimReport& r);

}  // namespace dslc::engine
