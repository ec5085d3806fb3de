// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dslc/cli.hpp"
#include "dslc/engine.hpp"
#include "dslc/ftl.hpp"
#include "dslc/retention.hpp"
#include "dslc/trace.hpp"
#include "support.hpp"

using namespace dslc;
using ftl::Policy;
using retention::RetentionCategory;
using trace::IORequest;
using trace::MixtureEntry;

namespace {

constexpr Micros kSec = kMicrosPerSecond;
constexpr Micros kHour = kMicrosPerHour;
constexpr Micros kDay = 24 * kHour;

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %-28s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Mode tables as printed in the source tables: one cell per (row, age column), values slash-separated
// across devices. Rows: le1h, 1h_10h, 10h_3d, ge3d.
using CellRows = std::array<std::array<const char*, 5>, 4>;

const CellRows kBaseTable = {{{"8", "8", "8", "8", "8"},
                              {"8", "8", "8", "4", "4"},
                              {"4", "4", "4", "2", "2"},
                              {"2", "2", "2", "2", "2"}}};
const CellRows kDriftTable = {{{"8/8/8", "8/8/8", "8/8/8", "8/8/8", "8/8/8"},
                               {"8/8/8", "4/8/8", "4/8/8", "4/4/8", "4/4/8"},
                               {"4/4/8", "4/4/4", "2/4/4", "2/2/4", "2/2/4"},
                               {"2/2/2", "2/2/2", "2/2/2", "2/2/2", "2/2/2"}}};
const CellRows kModesTable = {{{"8/8/8/8", "8/8/8/8", "8/8/8/8", "8/8/8/8", "8/8/8/8"},
                               {"8/8/8/8", "8/8/8/8", "8/8/8/8", "2/4/5/6", "2/4/5/6"},
                               {"2/4/5/6", "2/4/5/5", "2/4/4/4", "2/2/2/2", "2/2/2/2"},
                               {"2/2/2/2", "2/2/2/2", "2/2/2/2", "2/2/2/2", "2/2/2/2"}}};

int cell(const char* text, std::size_t which) {
  std::stringstream ss(text);
  std::string part;
  for (std::size_t i = 0; std::getline(ss, part, '/'); ++i) {
    if (i == which) return std::stoi(part);
  }
  return -1;
}

void criterion_tables() {
  int checked = 0, matched = 0;
  auto compare = [&](const CellRows& rows, std::size_t which, const char* preset) {
    const auto t = retention::preset_table(preset);
    for (int c = 0; c < 4; ++c) {
      for (int b = 0; b < 5; ++b) {
        ++checked;
        matched += t.at(retention::kAllCategories[c], b).states() == cell(rows[c][b], which);
      }
    }
  };
  compare(kBaseTable, 0, "normal3");
  compare(kDriftTable, 0, "weak3");
  compare(kDriftTable, 1, "normal3");
  compare(kDriftTable, 2, "strong3");
  compare(kModesTable, 0, "mode2");
  compare(kModesTable, 1, "mode3");
  compare(kModesTable, 2, "mode4");
  compare(kModesTable, 3, "mode5");
  report(1, "table fidelity", checked == matched && checked >= 60,
         std::to_string(matched) + "/" + std::to_string(checked) + " entries match");
}

void criterion_roundtrip() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> lk(std::log(1e-5), std::log(1e-2)), ln(0.0, std::log(1e5)),
      lt(std::log(1e-3), std::log(1e5));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = retention::DriftParams::custom(std::exp(lk(rng)));
    const double n = std::exp(ln(rng)), t = std::exp(lt(rng));
    const double back = retention::retention_capacity_hours(p, n, retention::drift_distance(p, n, t));
    worst = std::max(worst, std::abs(back - t) / t);
  }
  report(2, "drift model roundtrip", worst <= 1e-9, fmt("max relative error %.3g over 1000 triples", worst));
}

// ---------------------------------------------------------------------------

struct Workload {
  std::string name;
  flash::DeviceConfig device;
  std::vector<IORequest> trace;
  bool deterministic = false;
};

std::vector<IORequest> synth(std::vector<MixtureEntry> mix, std::uint64_t pages, Micros duration, std::uint64_t seed,
                             double jitter = 0.05) {
  trace::SyntheticSpec s;
  s.mixture = std::move(mix);
  s.working_set_pages = pages;
  s.duration = duration;
  s.seed = seed;
  s.jitter = jitter;
  return trace::generate_synthetic(s);
}

std::vector<MixtureEntry> categories(double le1h, double h10, double d3) {
  std::vector<MixtureEntry> m;
  if (le1h > 0) m.push_back(MixtureEntry::of_category(RetentionCategory::UpTo1Hour, le1h));
  if (h10 > 0) m.push_back(MixtureEntry::of_category(RetentionCategory::Hours1To10, h10));
  if (d3 > 0) m.push_back(MixtureEntry::of_category(RetentionCategory::Hours10To3Days, d3));
  return m;
}

struct Triple {
  engine::SimReport base, dslc, oracle;
};

struct Totals {
  std::uint64_t page_events = 0;
  std::uint64_t integrity_violations = 0;
  std::uint64_t pwe_violations = 0;
  std::vector<std::string> audit_failures;
  void add(const engine::SimReport& r, const std::string& tag) {
    page_events += r.counters.page_events;
    integrity_violations += r.counters.integrity_violations;
    pwe_violations += r.pwe_law.violations;
    if (!r.audit_failure.empty()) audit_failures.push_back(tag + ": " + r.audit_failure);
  }
};

config::SimConfig sim_config(const flash::DeviceConfig& dev) {
  config::SimConfig c;
  c.device = dev;
  c.run.strict_integrity = false;
  return c;
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion_tables();
  criterion_roundtrip();

  const auto desk = flash::scaled_config("desk");
  const auto large = flash::scaled_config("desk-large");
  const auto table = retention::preset_table("normal3");

  std::vector<Workload> work;
  work.push_back({"short-10min", desk, synth({MixtureEntry::of_duration(600 * kSec, 1.0)}, 400, 2 * kHour, 42)});
  work.push_back({"table2-mix-a", large, synth(categories(0.70, 0.25, 0.05), 600, 8 * kDay, 1)});
  work.push_back({"table2-mix-b", large, synth(categories(0.70, 0.25, 0.05), 900, 8 * kDay, 2)});
  work.push_back({"heavy-10h-3d", large, synth(categories(0.50, 0.25, 0.25), 600, 8 * kDay, 3)});
  work.push_back({"le1h-only", large, synth(categories(1.0, 0, 0), 600, 2 * kDay, 4)});
  work.push_back({"fixed-10min", large, synth({MixtureEntry::of_duration(600 * kSec, 1.0)}, 500, 4 * kHour, 5, 0.0), true});
  work.push_back({"fixed-3h", large, synth({MixtureEntry::of_duration(3 * kHour, 1.0)}, 500, 12 * kHour, 6, 0.0), true});
  work.push_back({"fixed-30h", large, synth({MixtureEntry::of_duration(30 * kHour, 1.0)}, 500, 5 * kDay, 7, 0.0), true});

  Totals totals;
  std::map<std::string, Triple> runs;
  for (const auto& w : work) {
    const auto cfg = sim_config(w.device);
    const auto res = cli::run_lifetimes(
        cfg, {{table, Policy::Baseline}, {table, Policy::Dslc}, {table, Policy::Oracle}}, w.trace, true);
    runs[w.name] = {res[0], res[1], res[2]};
    for (const auto& r : res) totals.add(r, w.name + "/" + r.policy);
  }

  // 9: sweeps (their runs also feed the integrity total).
  auto sweep = [&](const std::string& name, const char* axis) {
    const auto& w = *std::find_if(work.begin(), work.end(), [&](const Workload& x) { return x.name == name; });
    std::vector<engine::SimReport> reps;
    auto rows = cli::sweep(sim_config(w.device), w.trace, axis, true, &reps);
    for (const auto& r : reps) totals.add(r, name + "/" + axis + "/" + r.table);
    return rows;
  };
  const auto drift = sweep("table2-mix-a", "drift");
  const auto modes_hi = sweep("heavy-10h-3d", "modes");
  const auto modes_lo = sweep("le1h-only", "modes");

  // 3 and 4 use the short trace and every baseline run.
  {
    const auto& s = runs["short-10min"];
    const std::uint64_t cap8 = std::uint64_t{desk.pages_per_block} * 7;
    const bool law = totals.pwe_violations == 0;
    const bool saturated = s.dslc.pwe_law.max_writes_per_cycle[8] == cap8 && s.dslc.pwe_law.saturated_cycles[8] > 0;
    report(3, "PWE law", law && saturated,
           "violations " + std::to_string(totals.pwe_violations) + ", 8-state max writes/cycle " +
               std::to_string(s.dslc.pwe_law.max_writes_per_cycle[8]) + " of " + std::to_string(cap8) + " (" +
               std::to_string(s.dslc.pwe_law.saturated_cycles[8]) + " saturated cycles)");
  }
  {
    bool ok = true;
    std::size_t snaps = 0;
    for (const auto& [name, t] : runs) {
      const auto& b = t.base;
      for (const auto& s : b.pwe_timeline) {
        if (s.empty) continue;
        ++snaps;
        ok = ok && s.fraction(2) == 1.0;
      }
      ok = ok && b.pwe_law.max_writes_per_cycle[2] <= b.counters.total_pages_written &&
           b.pwe_law.max_writes_per_cycle[2] <= (name == "short-10min" ? desk : large).pages_per_block;
      for (int st = 3; st <= 8; ++st) ok = ok && b.pwe_law.completed_cycles[st] == 0;
    }
    report(4, "baseline identity", ok && snaps > 0,
           std::to_string(snaps) + " snapshots all 2-state, per-cycle writes <= pages");
  }
  {
    const auto& s = runs["short-10min"];
    const double ratio = s.dslc.lifetime_kb_written / s.base.lifetime_kb_written;
    report(5, "lifetime ratio band", ratio >= 5.5 && ratio <= 7.5, fmt("dslc/baseline = %.3f (band 5.5..7.5)", ratio));
  }
  {
    double worst = 1e9;
    std::string worst_name;
    std::uint64_t det_scrubs = 0;
    for (const auto& w : work) {
      const auto& t = runs[w.name];
      const double r = t.oracle.lifetime_kb_written / t.dslc.lifetime_kb_written;
      if (r < worst) {
        worst = r;
        worst_name = w.name;
      }
      if (w.deterministic) det_scrubs += t.oracle.counters.scrub_invocations;
    }
    report(6, "oracle dominance", worst >= 0.95 && det_scrubs == 0,
           fmt("min oracle/dslc %.4f", worst) + " (" + worst_name + "), deterministic-trace oracle scrubs " +
               std::to_string(det_scrubs));
  }
  {
    const bool ok = totals.page_events >= 10'000'000 && totals.integrity_violations == 0 && totals.audit_failures.empty();
    std::string detail = std::to_string(totals.page_events) + " page events, " +
                         std::to_string(totals.integrity_violations) + " reads past deadline";
    if (!totals.audit_failures.empty()) detail += ", audit: " + totals.audit_failures.front();
    report(7, "data integrity", ok, detail);
  }
  {
    std::mt19937_64 rng(77);
    const std::array<Policy, 3> pols{Policy::Baseline, Policy::Dslc, Policy::Oracle};
    std::size_t states = 0, mismatches = 0;
    for (int trial = 0; states < 10'000; ++trial) {
      const auto cfg = testing_support::small_device(8 + static_cast<std::uint32_t>(rng() % 57),
                                                     2 + static_cast<std::uint32_t>(rng() % 15),
                                                     2 + static_cast<std::uint32_t>(rng() % 10));
      const auto tbl = retention::preset_table(retention::kPresetNames[rng() % retention::kPresetNames.size()]);
      const std::uint64_t lpns = 1 + rng() % cfg.logical_pages();
      std::vector<trace::PageOp> ops;
      Micros t = 0;
      for (int i = 0; i < 600; ++i) {
        t += static_cast<Micros>(rng() % (3 * kHour));
        ops.push_back({t, trace::OpKind::Write, rng() % lpns});
      }
      const auto idx = ftl::OracleIndex::build(ops);
      ftl::Ftl f(cfg, tbl, pols[trial % 3], &idx);
      f.set_strict_integrity(false);
      Micros tick = cfg.scrub_period();
      try {
        for (const auto& op : ops) {
          while (tick <= op.timestamp) {
            f.scrub_expired(tick);
            tick += cfg.scrub_period();
          }
          f.handle_write(op.lpn, op.timestamp);
          ++states;
          if (f.select_gc_victim(0) != testing_support::brute_force_victim(f.device(), 0)) ++mismatches;
        }
      } catch (const ftl::DeviceDead&) {
      }
    }
    report(8, "greedy equivalence", mismatches == 0,
           std::to_string(states) + " device states, " + std::to_string(mismatches) + " mismatches");
  }
  {
    auto list = [](const std::vector<cli::SweepRow>& rows) {
      std::string s;
      for (const auto& r : rows) s += (s.empty() ? "" : " ") + r.preset + "=" + fmt("%.3f", r.normalized);
      return s;
    };
    auto non_decreasing = [](const std::vector<cli::SweepRow>& rows) {
      for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].lifetime_kb < rows[i - 1].lifetime_kb) return false;
      }
      return true;
    };
    double lo = 1e300, hi = 0;
    for (const auto& r : modes_lo) {
      lo = std::min(lo, r.lifetime_kb);
      hi = std::max(hi, r.lifetime_kb);
    }
    const double spread = (hi - lo) / lo;
    const bool ok = non_decreasing(drift) && non_decreasing(modes_hi) && spread < 0.10;
    report(9, "sensitivity trends", ok,
           "drift[" + list(drift) + "] modes/10h-3d[" + list(modes_hi) + "] modes/le1h spread " +
               fmt("%.2f%%", 100 * spread));
  }
  {
    double rate = 0, cost = 0;
    bool ok = true;
    for (const char* name : {"table2-mix-a", "table2-mix-b"}) {
      const auto& d = runs[name].dslc;
      const double c = d.scrub_cost / large.pages_per_block;
      rate = std::max(rate, d.scrub_rate);
      cost = std::max(cost, c);
      ok = ok && d.scrub_rate < 0.01 && c < 0.25;
    }
    report(10, "scrub overhead bound", ok,
           fmt("max scrub rate %.3f%%", 100 * rate) + fmt(", max scrub cost %.1f%% of a block", 100 * cost));
  }
  {
    double worst = 0;
    std::string worst_name;
    for (const auto& [name, t] : runs) {
      const double d = std::abs(t.dslc.throughput_kb_s - t.base.throughput_kb_s) / t.base.throughput_kb_s;
      if (d >= worst) {
        worst = d;
        worst_name = name;
      }
    }
    report(11, "throughput neutrality", worst <= 0.10, fmt("max deviation %.3f%%", 100 * worst) + " (" + worst_name + ")");
  }
  {
    trace::SyntheticSpec s;
    s.mixture = categories(0.55, 0.30, 0.10);
    s.mixture.push_back(MixtureEntry::of_category(RetentionCategory::Beyond3Days, 0.05));
    s.working_set_pages = 4000;
    s.duration = 7 * kDay;
    s.min_request_pages = 1;
    s.max_request_pages = 3;
    s.seed = 12;
    const auto prof = trace::analyze_longevity(trace::split_all(trace::generate_synthetic(s), s.page_size_bytes));
    const std::array<double, 4> want{0.55, 0.30, 0.10, 0.05};
    double worst = 0;
    for (int c = 0; c < 4; ++c) worst = std::max(worst, std::abs(prof.category_fractions[c] - want[c]));
    bool mono = !prof.cdf_points.empty() && prof.cdf_points.back().second == 1.0;
    for (std::size_t i = 1; i < prof.cdf_points.size(); ++i) {
      mono = mono && prof.cdf_points[i].second >= prof.cdf_points[i - 1].second &&
             prof.cdf_points[i].first > prof.cdf_points[i - 1].first;
    }
    report(12, "longevity analyzer", worst <= 0.01 && mono && prof.samples.size() >= 10000,
           fmt("max category error %.3f pp", 100 * worst) + ", " + std::to_string(prof.samples.size()) +
               " samples, CDF monotone to 1.0");
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d of 12 criteria failed (%.1f s)\n", failures, secs);
  return failures == 0 ? 0 : 1;
}
