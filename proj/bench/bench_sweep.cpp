// Wall time of the serial reference against the OpenMP path for a drift sweep and a compare.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "dslc/cli.hpp"

using namespace dslc;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::string scale = argc > 1 ? argv[1] : "desk-large";
  const int reps = argc > 2 ? std::atoi(argv[2]) : 3;

  config::SimConfig cfg;
  config::apply_scale(cfg, scale);
  cfg.run.snapshot_fraction = 0.05;

  trace::SyntheticSpec s;
  s.mixture = {trace::MixtureEntry::of_category(retention::RetentionCategory::UpTo1Hour, 0.70),
               trace::MixtureEntry::of_category(retention::RetentionCategory::Hours1To10, 0.25),
               trace::MixtureEntry::of_category(retention::RetentionCategory::Hours10To3Days, 0.05)};
  s.working_set_pages = cfg.device.logical_pages() / 2;
  s.duration = 8 * 24 * kMicrosPerHour;
  s.seed = 1;
  const auto trace = trace::generate_synthetic(s);

  const std::vector<cli::Job> jobs{{cfg.table, ftl::Policy::Baseline},
                                   {cfg.table, ftl::Policy::Dslc},
                                   {cfg.table, ftl::Policy::Oracle}};

  std::printf("scale %s, %zu requests, %d threads\n", scale.c_str(), trace.size(), omp_get_max_threads());
  std::printf("%-10s %10s %10s %8s\n", "workload", "serial_s", "omp_s", "speedup");
  for (const char* what : {"compare", "sweep"}) {
    double ser = 1e300, par = 1e300;
    for (int r = 0; r < reps; ++r) {
      for (bool parallel : {false, true}) {
        const double t = seconds([&] {
          if (std::string(what) == "compare") {
            cli::run_lifetimes(cfg, jobs, trace, parallel);
          } else {
            cli::sweep(cfg, trace, "drift", parallel);
          }
        });
        (parallel ? par : ser) = std::min(parallel ? par : ser, t);
      }
    }
    std::printf("%-10s %10.3f %10.3f %8.2f\n", what, ser, par, ser / par);
  }
  return 0;
}
