#include "dslc/cli.hpp"

#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace dslc::cli {

namespace fs = std::filesystem;

std::vector<engine::SimReport> run_lifetimes(const config::SimConfig& cfg, const std::vector<Job>& jobs,
                                             const std::vector<trace::IORequest>& trace, bool parallel) {
  const auto n = static_cast<long>(jobs.size());
  std::vector<engine::SimReport> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  auto one = [&](long i) {
    try {
      out[i] = engine::run_until_death(cfg.device, jobs[i].table, jobs[i].policy, trace, cfg.run);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) one(i);
  } else {
    for (long i = 0; i < n; ++i) one(i);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<std::string> sweep_presets(const std::string& axis) {
  if (axis == "drift") return {"weak3", "normal3", "strong3"};
  if (axis == "modes") return {"mode2", "mode3", "mode4", "mode5"};
  throw std::invalid_argument("unknown sweep axis '" + axis + "' (expected drift or modes)");
}

std::vector<SweepRow> sweep(const config::SimConfig& cfg, const std::vector<trace::IORequest>& trace,
                            const std::string& axis, bool parallel, std::vector<engine::SimReport>* reports) {
  const auto presets = sweep_presets(axis);
  std::vector<Job> jobs{{retention::baseline_table(), ftl::Policy::Baseline}};
  for (const auto& p : presets) jobs.push_back({retention::preset_table(p), ftl::Policy::Dslc});
  auto res = run_lifetimes(cfg, jobs, trace, parallel);

  const double base = res[0].lifetime_kb_written;
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < presets.size(); ++i) {
    const auto& r = res[i + 1];
    rows.push_back({presets[i], r.lifetime_kb_written, base, base > 0 ? r.lifetime_kb_written / base : 0.0,
                    r.truncated || res[0].truncated});
  }
  if (reports) *reports = std::move(res);
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "preset,lifetime_kb_written,baseline_kb_written,normalized_lifetime,truncated\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.preset << ',' << r.lifetime_kb << ',' << r.baseline_kb << ',' << r.normalized << ','
        << (r.truncated ? 1 : 0) << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error(p.string() + ": cannot write");
  return out;
}

std::vector<trace::IORequest> load_nonempty(const std::string& path) {
  auto t = trace::load_msr_trace(path);
  if (t.empty()) throw std::runtime_error(path + ": trace is empty");
  return t;
}

void write_run_files(const fs::path& dir, const std::string& stem, const engine::SimReport& r) {
  auto rep = open_out(dir / (stem + "_report.csv"));
  engine::write_report_csv(rep, r);
  auto tl = open_out(dir / (stem + "_pwe_timeline.csv"));
  engine::write_timeline_csv(tl, r);
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const config::ConfigLoadError& e) {
    err << e.what() << '\n';
  } catch (const flash::ConfigError& e) {
    err << e.what() << '\n';
  } catch (const trace::TraceParseError& e) {
    err << "trace error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace

int cmd_analyze(const std::string& trace_path, std::uint64_t page_size, const std::string& out_path, std::ostream& log,
                std::ostream& err) {
  return guarded(err, [&] {
    const auto t = load_nonempty(trace_path);
    const auto ops = trace::split_all(t, page_size);
    const auto prof = trace::analyze_longevity(ops);
    auto out = open_out(out_path);
    trace::write_longevity_csv(out, prof);
    log << std::fixed << std::setprecision(2);
    for (auto c : retention::kAllCategories) {
      log << retention::category_name(c) << ": " << 100.0 * prof.category_fractions[static_cast<int>(c)] << "%\n";
    }
    return 0;
  });
}

int cmd_compare(const config::SimConfig& cfg, const std::string& trace_path, const std::string& out_dir,
                std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const auto t = load_nonempty(trace_path);
    const std::vector<Job> jobs{{cfg.table, ftl::Policy::Baseline},
                                {cfg.table, ftl::Policy::Dslc},
                                {cfg.table, ftl::Policy::Oracle}};
    const auto res = run_lifetimes(cfg, jobs, t, true);
    const fs::path dir(out_dir);
    bool truncated = false;
    for (const auto& r : res) {
      write_run_files(dir, r.policy, r);
      truncated = truncated || r.truncated;
    }
    const double base = res[0].lifetime_kb_written;
    auto sum = open_out(dir / "summary.csv");
    sum << std::setprecision(10) << "policy,lifetime_kb_written,normalized_lifetime,truncated\n";
    for (const auto& r : res) {
      const double norm = base > 0 ? r.lifetime_kb_written / base : 0.0;
      sum << r.policy << ',' << r.lifetime_kb_written << ',' << norm << ',' << (r.truncated ? 1 : 0) << '\n';
      log << r.policy << ": lifetime " << r.lifetime_kb_written << " KB, x" << norm
          << (r.truncated ? " (truncated: " + r.death_cause + ")" : "") << '\n';
    }
    return truncated ? 2 : 0;
  });
}

int cmd_sweep(const config::SimConfig& cfg, const std::string& trace_path, const std::string& axis,
              const std::string& out_dir, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    sweep_presets(axis);
    const auto t = load_nonempty(trace_path);
    std::vector<engine::SimReport> reports;
    const auto rows = sweep(cfg, t, axis, true, &reports);
    const fs::path dir(out_dir);
    write_run_files(dir, "baseline", reports[0]);
    for (std::size_t i = 0; i < rows.size(); ++i) write_run_files(dir, rows[i].preset, reports[i + 1]);
    auto out = open_out(dir / ("sweep_" + axis + ".csv"));
    write_sweep_csv(out, rows);
    bool truncated = false;
    for (const auto& r : rows) {
      log << r.preset << ": x" << r.normalized << (r.truncated ? " (truncated)" : "") << '\n';
      truncated = truncated || r.truncated;
    }
    return truncated ? 2 : 0;
  });
}

int cmd_run(const config::SimConfig& cfg, const std::string& trace_path, const std::string& out_dir, bool lifetime,
            std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const auto t = load_nonempty(trace_path);
    const auto r = lifetime ? engine::run_until_death(cfg.device, cfg.table, cfg.policy, t, cfg.run)
                            : engine::run_trace(cfg.device, cfg.table, cfg.policy, t, cfg.run);
    write_run_files(fs::path(out_dir), r.policy, r);
    log << r.policy << " (" << r.table << "): " << r.counters.host_pages_written << " host pages written, "
        << r.counters.gc_invocations << " GCs, " << r.counters.scrub_invocations << " scrubs, "
        << r.throughput_kb_s << " KB/s";
    if (r.truncated) log << " [truncated: " << r.death_cause << "]";
    log << '\n';
    return r.truncated ? 2 : 0;
  });
}

int cmd_synth(const trace::SyntheticSpec& spec, const std::string& out_path, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const auto t = trace::generate_synthetic(spec);
    auto out = open_out(out_path);
    trace::write_msr_trace(out, t);
    log << t.size() << " requests written to " << out_path << '\n';
    return 0;
  });
}

}  // namespace dslc::cli
