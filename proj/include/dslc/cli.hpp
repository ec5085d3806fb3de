#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dslc/config.hpp"
#include "dslc/engine.hpp"
#include "dslc/trace.hpp"

namespace dslc::cli {

struct Job {
  retention::ModeAssignmentTable table;
  ftl::Policy policy;
};

/// Lifetime runs for independent jobs. The parallel path spreads jobs over OpenMP threads;
/// the serial path is the reference it must match.
std::vector<engine::SimReport> run_lifetimes(const config::SimConfig& cfg, const std::vector<Job>& jobs,
                                             const std::vector<trace::IORequest>& trace, bool parallel);

/// Preset names along a sweep axis: "drift" or "modes".
std::vector<std::string> sweep_presets(const std::string& axis);

struct SweepRow {
  std::string preset;
  double lifetime_kb = 0.0;
  double baseline_kb = 0.0;
  double normalized = 0.0;
  bool truncated = false;
};

std::vector<SweepRow> sweep(const config::SimConfig& cfg, const std::vector<trace::IORequest>& trace,
                            const std::string& axis, bool parallel, std::vector<engine::SimReport>* reports = nullptr);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Commands: each returns a process exit status and writes diagnostics to `err`.
int cmd_analyze(const std::string& trace_path, std::uint64_t page_size, const std::string& out_path, std::ostream& log,
                std::ostream& err);
int cmd_compare(const config::SimConfig& cfg, const std::string& trace_path, const std::string& out_dir,
                std::ostream& log, std::ostream& err);
int cmd_sweep(const config::SimConfig& cfg, const std::string& trace_path, const std::string& axis,
              const std::string& out_dir, std::ostream& log, std::ostream& err);
int cmd_run(const config::SimConfig& cfg, const std::string& trace_path, const std::string& out_dir, bool lifetime,
            std::ostream& log, std::ostream& err);
int cmd_synth(const trace::SyntheticSpec& spec, const std::string& out_path, std::ostream& log, std::ostream& err);

}  // namespace dslc::cli
