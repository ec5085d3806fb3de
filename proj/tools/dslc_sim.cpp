#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dslc/cli.hpp"

using namespace dslc;

namespace {

std::vector<trace::MixtureEntry> parse_mixture(const std::string& text) {
  // "10m:0.7,3h:0.25,ge3d:0.05"
  std::vector<trace::MixtureEntry> out;
  std::stringstream ss(text);
  std::string term;
  while (std::getline(ss, term, ',')) {
    const auto colon = term.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("mixture term '" + term + "' needs :weight");
    out.push_back(trace::parse_mixture_term(term.substr(0, colon), std::stod(term.substr(colon + 1))));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic multi-state SLC flash simulator"};
  app.require_subcommand(1);

  std::string config_path, trace_path, out, policy, preset, scale, axis = "drift";
  std::uint64_t seed = 42, epoch_limit = 0, page_size = 0;
  bool lifetime = false;

  auto add_sim_flags = [&](CLI::App* c) {
    c->add_option("--config", config_path, "JSON config file");
    c->add_option("--trace", trace_path, "MSR-format trace")->required();
    c->add_option("--out", out, "output directory")->required();
    c->add_option("--preset", preset, "mode assignment preset");
    c->add_option("--scale", scale, "named geometry: paper, desk, desk-large");
    c->add_option("--epoch-limit", epoch_limit, "cap on replayed epochs");
  };

  auto* analyze = app.add_subcommand("analyze", "data longevity CDF and category fractions");
  analyze->add_option("--trace", trace_path)->required();
  analyze->add_option("--out", out, "CSV path")->required();
  analyze->add_option("--config", config_path);
  analyze->add_option("--page-size", page_size, "bytes per page (default from config)");

  auto* compare = app.add_subcommand("compare", "lifetime of baseline, dslc and oracle");
  add_sim_flags(compare);
  auto* sweep = app.add_subcommand("sweep", "lifetime sweep over preset tables");
  add_sim_flags(sweep);
  sweep->add_option("--axis", axis, "drift or modes")->check(CLI::IsMember({"drift", "modes"}));
  auto* run = app.add_subcommand("run", "single policy run");
  add_sim_flags(run);
  run->add_option("--policy", policy, "baseline, dslc or oracle");
  run->add_flag("--lifetime", lifetime, "loop the trace until the device dies");

  trace::SyntheticSpec spec;
  std::string mixture = "le1h:1", duration = "2h";
  auto* synth = app.add_subcommand("synth", "emit a synthetic trace");
  synth->add_option("--out", out, "trace path")->required();
  synth->add_option("--seed", seed);
  synth->add_option("--mixture", mixture, "comma list of longevity:weight, e.g. 10m:0.7,3h:0.3");
  synth->add_option("--duration", duration, "e.g. 6h, 3d");
  synth->add_option("--working-set", spec.working_set_pages, "pages");
  synth->add_option("--write-ratio", spec.write_ratio);
  synth->add_option("--page-size", spec.page_size_bytes);
  synth->add_option("--min-request-pages", spec.min_request_pages);
  synth->add_option("--max-request-pages", spec.max_request_pages);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      spec.seed = seed;
      spec.mixture = parse_mixture(mixture);
      spec.duration = trace::parse_duration(duration);
      return cli::cmd_synth(spec, out, std::cout, std::cerr);
    }

    config::SimConfig cfg = config_path.empty() ? config::SimConfig{} : config::load_config(config_path);
    if (!scale.empty()) config::apply_scale(cfg, scale);
    if (!preset.empty()) cfg.table = retention::preset_table(preset);
    if (!policy.empty()) cfg.policy = ftl::parse_policy(policy);
    if (epoch_limit > 0) cfg.run.epoch_limit = epoch_limit;
    cfg.device.validate();

    if (analyze->parsed()) {
      return cli::cmd_analyze(trace_path, page_size ? page_size : cfg.device.page_size_bytes, out, std::cout,
                              std::cerr);
    }
    if (compare->parsed()) return cli::cmd_compare(cfg, trace_path, out, std::cout, std::cerr);
    if (sweep->parsed()) return cli::cmd_sweep(cfg, trace_path, axis, out, std::cout, std::cerr);
    if (run->parsed()) return cli::cmd_run(cfg, trace_path, out, lifetime, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 1;
}
