#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dslc/retention.hpp"
#include "dslc/units.hpp"

namespace dslc::trace {

enum class OpKind : std::uint8_t { Read, Write };

struct IORequest {
  Micros timestamp = 0;
  OpKind kind = OpKind::Write;
  std::uint64_t offset_bytes = 0;
  std::uint64_t size_bytes = 0;

  friend bool operator==(const IORequest&, const IORequest&) = default;
};

struct PageOp {
  Micros timestamp = 0;
  OpKind kind = OpKind::Write;
  std::uint64_t lpn = 0;

  friend bool operator==(const PageOp&, const PageOp&) = default;
};

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// ---------------------------------------------------------------------------
// MSR Cambridge CSV: Timestamp,Hostname,DiskNumber,Type,Offset,Size,ResponseTime
// Timestamp is a Windows FILETIME (100 ns ticks).

struct MsrRecord {
  std::int64_t ticks = 0;
  OpKind kind = OpKind::Write;
  std::uint64_t offset_bytes = 0;
  std::uint64_t size_bytes = 0;
};

MsrRecord parse_msr_record(std::string_view line, std::size_t line_no = 0);

/// Parses one line; the timestamp becomes microseconds after `anchor_ticks`.
IORequest parse_msr_line(std::string_view line, std::int64_t anchor_ticks, std::size_t line_no = 0);

/// Reads a whole trace, sorts it by time (stable) and anchors it at the earliest record.
std::vector<IORequest> read_msr_trace(std::istream& in);
std::vector<IORequest> load_msr_trace(const std::string& path);

/// FILETIME used as time zero for emitted traces.
inline constexpr std::int64_t kSynthBaseTicks = 128166372000000000LL;

std::string format_msr_line(const IORequest& req, std::int64_t base_ticks = kSynthBaseTicks);
void write_msr_trace(std::ostream& out, std::span<const IORequest> trace);

// ---------------------------------------------------------------------------

std::vector<PageOp> split_to_pages(const IORequest& req, std::uint64_t page_size_bytes);
std::vector<PageOp> split_all(std::span<const IORequest> trace, std::uint64_t page_size_bytes);

struct LongevityProfile {
  /// One entry per sample; kNever marks an LPN written only once.
  std::vector<Micros> samples;
  /// (longevity seconds, cumulative fraction); the last point may be +inf.
  std::vector<std::pair<double, double>> cdf_points;
  std::array<double, retention::kCategoryCount> category_fractions{};
  bool empty = true;
};

/// Streaming accumulator: feed time-ordered page ops, then finish().
class LongevityAnalyzer {
 public:
  void add(const PageOp& op);
  LongevityProfile finish() const;

 private:
  struct LpnState {
    Micros last_write = 0;
    std::uint64_t writes = 0;
  };
  std::unordered_map<std::uint64_t, LpnState> lpns_;
  std::vector<Micros> gaps_;
};

LongevityProfile analyze_longevity(std::span<const PageOp> ops);

/// Header, (longevity_seconds, cdf) rows, a blank line, then category fractions.
void write_longevity_csv(std::ostream& out, const LongevityProfile& profile);

// ---------------------------------------------------------------------------

struct MixtureEntry {
  /// Either a category (a duration is drawn inside it per extent) or an explicit duration.
  std::optional<retention::RetentionCategory> category;
  Micros longevity = 0;
  double weight = 0.0;

  static MixtureEntry of_category(retention::RetentionCategory c, double w) { return {c, 0, w}; }
  static MixtureEntry of_duration(Micros d, double w) { return {std::nullopt, d, w}; }
};

struct SyntheticSpec {
  std::uint64_t working_set_pages = 1000;
  std::uint64_t page_size_bytes = 8192;
  double write_ratio = 1.0;
  std::vector<MixtureEntry> mixture;
  Micros duration = 2 * kMicrosPerHour;
  std::uint32_t min_request_pages = 1;
  std::uint32_t max_request_pages = 1;
  double jitter = 0.05;
  std::uint64_t seed = 42;
};

/// Each extent of the working set is rewritten at its target longevity for the whole duration.
/// Throws std::invalid_argument on an invalid spec.
std::vector<IORequest> generate_synthetic(const SyntheticSpec& spec);

/// Parses "600s", "10m", "5h", "3d" or a category name (le1h, 1h_10h, 10h_3d, ge3d).
MixtureEntry parse_mixture_term(std::string_view term, double weight);
Micros parse_duration(std::string_view text);

// ---------------------------------------------------------------------------

/// Span + one mean inter-arrival gap; the time offset between consecutive epochs.
Micros epoch_period(std::span<const IORequest> trace);
std::vector<IORequest> loop_stream(std::span<const IORequest> trace, std::uint64_t epoch);

}  // namespace dslc::trace
