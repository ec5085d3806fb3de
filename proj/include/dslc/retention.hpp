#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "dslc/units.hpp"

namespace dslc::retention {

// Voltage drift model: D = K * N_PE * ln(1 + T_hours), in normalized units.
struct DriftParams {
  enum class Label { Weak, Normal, Strong, Custom };

  double k_scale = 4e-4;
  Label label = Label::Normal;

  static DriftParams weak() { return {5e-4, Label::Weak}; }
  static DriftParams normal() { return {4e-4, Label::Normal}; }
  static DriftParams strong() { return {3e-4, Label::Strong}; }
  static DriftParams custom(double k);
};

double drift_distance(const DriftParams& params, double n_pe, double t_rt_hours);

/// Inverse of drift_distance in T. Returns kUnboundedHours when n_pe == 0.
double retention_capacity_hours(const DriftParams& params, double n_pe, double guard);

enum class RetentionCategory : int { UpTo1Hour = 0, Hours1To10 = 1, Hours10To3Days = 2, Beyond3Days = 3 };

inline constexpr int kCategoryCount = 4;
inline constexpr std::array<RetentionCategory, kCategoryCount> kAllCategories = {
    RetentionCategory::UpTo1Hour, RetentionCategory::Hours1To10, RetentionCategory::Hours10To3Days,
    RetentionCategory::Beyond3Days};

/// Inclusive upper bound in hours; Beyond3Days is unbounded.
double upper_bound_hours(RetentionCategory c);
std::string_view category_name(RetentionCategory c);

/// Intervals are [0,1h], (1h,10h], (10h,72h], (72h,inf).
RetentionCategory categorize_longevity_hours(double hours);
RetentionCategory categorize_longevity(Micros duration);

/// Number of voltage states in a block; writes per erase cycle is states - 1.
class StateMode {
 public:
  constexpr StateMode() = default;
  explicit StateMode(int states);

  constexpr int states() const { return states_; }
  constexpr int pwe() const { return states_ - 1; }

  friend constexpr bool operator==(StateMode, StateMode) = default;
  friend constexpr auto operator<=>(StateMode a, StateMode b) { return a.states_ <=> b.states_; }

 private:
  int states_ = 2;
};

inline constexpr int kAgeBuckets = 5;

/// min(4, floor(5 * pe / endurance)).
int age_bucket(long long pe, long long endurance);

class ModeAssignmentTable {
 public:
  using Grid = std::array<std::array<int, kAgeBuckets>, kCategoryCount>;

  ModeAssignmentTable(std::string name, std::vector<int> mode_states, const Grid& grid);

  const std::string& name() const { return name_; }
  /// Available modes, ascending by state count.
  const std::vector<StateMode>& mode_set() const { return modes_; }
  const Grid& grid() const { return grid_; }

  StateMode at(RetentionCategory c, int bucket) const;
  bool contains(StateMode m) const;
  StateMode highest() const { return modes_.back(); }
  StateMode lowest() const { return modes_.front(); }
  /// Next mode with fewer states; the lowest mode maps to itself.
  StateMode next_lower(StateMode m) const;

  friend bool operator==(const ModeAssignmentTable& a, const ModeAssignmentTable& b) {
    return a.modes_ == b.modes_ && a.grid_ == b.grid_;
  }

 private:
  std::string name_;
  std::vector<StateMode> modes_;
  Grid grid_{};
};

inline constexpr std::array<std::string_view, 7> kPresetNames = {"normal3", "weak3", "strong3", "mode2",
                                                                "mode3",   "mode4", "mode5"};

/// Throws std::invalid_argument for an unknown preset.
ModeAssignmentTable preset_table(std::string_view preset);

/// Single-mode table used by the conventional SLC baseline.
ModeAssignmentTable baseline_table();

StateMode assign_mode(const ModeAssignmentTable& table, RetentionCategory cat, long long pe, long long endurance);

/// Retention a block of `mode` must honor at `bucket`: the largest category bound routed to it.
double mode_retention_capacity(const ModeAssignmentTable& table, StateMode mode, int bucket);

}  // namespace dslc::retention
