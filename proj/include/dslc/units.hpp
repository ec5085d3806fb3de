#pragma once

#include <cstdint>
#include <limits>

namespace dslc {

/// Simulated time in integer microseconds since trace start.
using Micros = std::int64_t;

/// Deadline value for data that never expires.
inline constexpr Micros kNever = std::numeric_limits<Micros>::max();

inline constexpr Micros kMicrosPerSecond = 1'000'000;
inline constexpr Micros kMicrosPerHour = 3600 * kMicrosPerSecond;

/// Retention durations in hours; +inf means unbounded.
inline constexpr double kUnboundedHours = std::numeric_limits<double>::infinity();

inline constexpr double to_hours(Micros us) { return static_cast<double>(us) / kMicrosPerHour; }
inline constexpr double to_seconds(Micros us) { return static_cast<double>(us) / kMicrosPerSecond; }

}  // namespace dslc
