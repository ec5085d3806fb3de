#include "dslc/retention.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dslc::retention {

DriftParams DriftParams::custom(double k) {
  if (!(k > 0.0)) throw std::invalid_argument("k_scale must be positive");
  return {k, Label::Custom};
}

double drift_distance(const DriftParams& params, double n_pe, double t_rt_hours) {
  if (n_pe < 0.0 || t_rt_hours < 0.0) throw std::domain_error("drift_distance: negative input");
  return params.k_scale * n_pe * std::log1p(t_rt_hours);
}

double retention_capacity_hours(const DriftParams& params, double n_pe, double guard) {
  if (n_pe < 0.0 || guard < 0.0) throw std::domain_error("retention_capacity_hours: negative input");
  if (n_pe == 0.0) return kUnboundedHours;
  return std::expm1(guard / (params.k_scale * n_pe));
}

double upper_bound_hours(RetentionCategory c) {
  switch (c) {
    case RetentionCategory::UpTo1Hour: return 1.0;
    case RetentionCategory::Hours1To10: return 10.0;
    case RetentionCategory::Hours10To3Days: return 72.0;
    case RetentionCategory::Beyond3Days: return kUnboundedHours;
  }
  return kUnboundedHours;
}

std::string_view category_name(RetentionCategory c) {
  switch (c) {
    case RetentionCategory::UpTo1Hour: return "le1h";
    case RetentionCategory::Hours1To10: return "1h_10h";
    case RetentionCategory::Hours10To3Days: return "10h_3d";
    case RetentionCategory::Beyond3Days: return "ge3d";
  }
  return "?";
}

RetentionCategory categorize_longevity_hours(double hours) {
  if (hours <= 1.0) return RetentionCategory::UpTo1Hour;
  if (hours <= 10.0) return RetentionCategory::Hours1To10;
  if (hours <= 72.0) return RetentionCategory::Hours10To3Days;
  return RetentionCategory::Beyond3Days;
}

RetentionCategory categorize_longevity(Micros duration) {
  // Integer comparison keeps the boundaries exact.
  if (duration == kNever) return RetentionCategory::Beyond3Days;
  if (duration <= 1 * kMicrosPerHour) return RetentionCategory::UpTo1Hour;
  if (duration <= 10 * kMicrosPerHour) return RetentionCategory::Hours1To10;
  if (duration <= 72 * kMicrosPerHour) return RetentionCategory::Hours10To3Days;
  return RetentionCategory::Beyond3Days;
}

StateMode::StateMode(int states) : states_(states) {
  if (states < 2) throw std::invalid_argument("state mode needs at least 2 states");
}

int age_bucket(long long pe, long long endurance) {
  if (endurance <= 0) throw std::invalid_argument("endurance must be positive");
  if (pe <= 0) return 0;
  return static_cast<int>(std::min<long long>(kAgeBuckets - 1, (kAgeBuckets * pe) / endurance));
}

ModeAssignmentTable::ModeAssignmentTable(std::string name, std::vector<int> mode_states, const Grid& grid)
    : name_(std::move(name)), grid_(grid) {
  if (mode_states.empty()) throw std::invalid_argument("mode set is empty");
  std::sort(mode_states.begin(), mode_states.end());
  mode_states.erase(std::unique(mode_states.begin(), mode_states.end()), mode_states.end());
  for (int s : mode_states) modes_.emplace_back(s);
  if (modes_.front().states() != 2) throw std::invalid_argument("mode set must include the 2-state mode");

  for (int c = 0; c < kCategoryCount; ++c) {
    for (int b = 0; b < kAgeBuckets; ++b) {
      const int s = grid_[c][b];
      if (std::find(mode_states.begin(), mode_states.end(), s) == mode_states.end()) {
        throw std::invalid_argument("table entry [" + std::to_string(c) + "][" + std::to_string(b) + "] = " +
                                    std::to_string(s) + " is not in the mode set");
      }
      if (b > 0 && s > grid_[c][b - 1]) {
        throw std::invalid_argument("table row " + std::to_string(c) + " increases with block age");
      }
    }
  }
  for (int b = 0; b < kAgeBuckets; ++b) {
    if (grid_[kCategoryCount - 1][b] != 2) throw std::invalid_argument("ge3d row must map to the 2-state mode");
  }
}

StateMode ModeAssignmentTable::at(RetentionCategory c, int bucket) const {
  if (bucket < 0 || bucket >= kAgeBuckets) throw std::out_of_range("age bucket out of range");
  return StateMode(grid_[static_cast<int>(c)][bucket]);
}

bool ModeAssignmentTable::contains(StateMode m) const {
  return std::find(modes_.begin(), modes_.end(), m) != modes_.end();
}

StateMode ModeAssignmentTable::next_lower(StateMode m) const {
  auto it = std::lower_bound(modes_.begin(), modes_.end(), m);
  if (it == modes_.begin()) return modes_.front();
  return *std::prev(it);
}

namespace {

using Grid = ModeAssignmentTable::Grid;

// Rows: le1h, 1h-10h, 10h-3d, ge3d. Columns: fifths of the endurance limit.
constexpr Grid kNormal3 = {{{8, 8, 8, 8, 8}, {8, 8, 8, 4, 4}, {4, 4, 4, 2, 2}, {2, 2, 2, 2, 2}}};
constexpr Grid kWeak3 = {{{8, 8, 8, 8, 8}, {8, 4, 4, 4, 4}, {4, 4, 2, 2, 2}, {2, 2, 2, 2, 2}}};
constexpr Grid kStrong3 = {{{8, 8, 8, 8, 8}, {8, 8, 8, 8, 8}, {8, 4, 4, 4, 4}, {2, 2, 2, 2, 2}}};
constexpr Grid kMode2 = {{{8, 8, 8, 8, 8}, {8, 8, 8, 2, 2}, {2, 2, 2, 2, 2}, {2, 2, 2, 2, 2}}};
constexpr Grid kMode4 = {{{8, 8, 8, 8, 8}, {8, 8, 8, 5, 5}, {5, 5, 4, 2, 2}, {2, 2, 2, 2, 2}}};
constexpr Grid kMode5 = {{{8, 8, 8, 8, 8}, {8, 8, 8, 6, 6}, {6, 5, 4, 2, 2}, {2, 2, 2, 2, 2}}};

}  // namespace

ModeAssignmentTable preset_table(std::string_view preset) {
  if (preset == "normal3") return {"normal3", {2, 4, 8}, kNormal3};
  if (preset == "mode3") return {"mode3", {2, 4, 8}, kNormal3};
  if (preset == "weak3") return {"weak3", {2, 4, 8}, kWeak3};
  if (preset == "strong3") return {"strong3", {2, 4, 8}, kStrong3};
  if (preset == "mode2") return {"mode2", {2, 8}, kMode2};
  if (preset == "mode4") return {"mode4", {2, 4, 5, 8}, kMode4};
  if (preset == "mode5") return {"mode5", {2, 4, 5, 6, 8}, kMode5};
  throw std::invalid_argument("unknown mode table preset: " + std::string(preset));
}

ModeAssignmentTable baseline_table() {
  Grid g{};
  for (auto& row : g) row.fill(2);
  return {"baseline", {2}, g};
}

StateMode assign_mode(const ModeAssignmentTable& table, RetentionCategory cat, long long pe, long long endurance) {
  return table.at(cat, age_bucket(pe, endurance));
}

namespace {

// Largest category bound routed to `mode` at `bucket`, or a negative value if none.
double routed_bound(const ModeAssignmentTable& table, StateMode mode, int bucket) {
  double best = -1.0;
  for (auto c : kAllCategories) {
    if (table.at(c, bucket) == mode) best = std::max(best, upper_bound_hours(c));
  }
  return best;
}

}  // namespace

double mode_retention_capacity(const ModeAssignmentTable& table, StateMode mode, int bucket) {
  if (bucket < 0 || bucket >= kAgeBuckets) throw std::out_of_range("age bucket out of range");
  if (mode.states() == 2) return kUnboundedHours;

  if (double h = routed_bound(table, mode, bucket); h >= 0.0) return h;
  for (int b = bucket - 1; b >= 0; --b) {
    if (double h = routed_bound(table, mode, b); h >= 0.0) return h;
  }
  // A mode first routed at an older age (e.g. 4-state under strong3) takes that bound.
  for (int b = bucket + 1; b < kAgeBuckets; ++b) {
    if (double h = routed_bound(table, mode, b); h >= 0.0) return h;
  }
  return kUnboundedHours;
}

}  // namespace dslc::retention
