#include "dslc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dslc::config {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& problems) {
  std::string s = "invalid configuration";
  for (const auto& p : problems) s += "\n  " + p;
  return s;
}

class Reader {
 public:
  std::vector<std::string> problems;

  void unknown_keys(const json& obj, const std::string& path, std::set<std::string> known) {
    for (const auto& [k, v] : obj.items()) {
      if (!known.count(k)) problems.push_back(path + k + ": unknown key");
    }
  }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    problems.push_back(path + ": expected an object");
    return false;
  }

  template <class T>
  void uint_field(const json& obj, const std::string& path, const char* key, T& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      problems.push_back(path + key + ": expected a non-negative integer");
      return;
    }
    out = v.get<T>();
  }

  void real_field(const json& obj, const std::string& path, const char* key, double& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      problems.push_back(path + key + ": expected a number");
      return;
    }
    out = v.get<double>();
  }

  void bool_field(const json& obj, const std::string& path, const char* key, bool& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
      problems.push_back(path + key + ": expected true or false");
      return;
    }
    out = v.get<bool>();
  }
};

void read_device(Reader& rd, const json& d, flash::DeviceConfig& dev) {
  const std::string p = "device.";
  rd.unknown_keys(d, p,
                  {"chips", "blocks_per_chip", "pages_per_block", "page_size_bytes", "endurance", "read_us", "write_us",
                   "erase_us", "transfer_mb_s", "gc_clean_threshold", "scrub_period_s", "overprovision",
                   "dummy_write_multiplier"});
  rd.uint_field(d, p, "chips", dev.chips);
  rd.uint_field(d, p, "blocks_per_chip", dev.blocks_per_chip);
  rd.uint_field(d, p, "pages_per_block", dev.pages_per_block);
  rd.uint_field(d, p, "page_size_bytes", dev.page_size_bytes);
  rd.uint_field(d, p, "endurance", dev.endurance);
  rd.real_field(d, p, "read_us", dev.read_us);
  rd.real_field(d, p, "write_us", dev.write_us);
  rd.real_field(d, p, "erase_us", dev.erase_us);
  rd.real_field(d, p, "transfer_mb_s", dev.transfer_mb_s);
  rd.real_field(d, p, "gc_clean_threshold", dev.gc_clean_threshold);
  rd.real_field(d, p, "scrub_period_s", dev.scrub_period_s);
  rd.real_field(d, p, "overprovision", dev.overprovision);
  rd.real_field(d, p, "dummy_write_multiplier", dev.dummy_write_multiplier);
}

std::optional<retention::ModeAssignmentTable> read_table(Reader& rd, const json& t) {
  if (t.is_string()) {
    try {
      return retention::preset_table(t.get<std::string>());
    } catch (const std::exception& e) {
      rd.problems.push_back(std::string("table: ") + e.what());
      return std::nullopt;
    }
  }
  if (!rd.object(t, "table")) return std::nullopt;
  rd.unknown_keys(t, "table.", {"name", "modes", "grid"});
  std::string name = "custom";
  if (t.contains("name")) {
    if (t["name"].is_string()) {
      name = t["name"].get<std::string>();
    } else {
      rd.problems.push_back("table.name: expected a string");
    }
  }
  std::vector<int> modes;
  if (!t.contains("modes") || !t["modes"].is_array()) {
    rd.problems.push_back("table.modes: expected an array of state counts");
  } else {
    for (std::size_t i = 0; i < t["modes"].size(); ++i) {
      const json& m = t["modes"][i];
      if (!m.is_number_integer()) {
        rd.problems.push_back("table.modes[" + std::to_string(i) + "]: expected an integer");
      } else {
        modes.push_back(m.get<int>());
      }
    }
  }
  retention::ModeAssignmentTable::Grid grid{};
  bool grid_ok = t.contains("grid") && t["grid"].is_array() && t["grid"].size() == retention::kCategoryCount;
  if (!grid_ok) {
    rd.problems.push_back("table.grid: expected 4 rows (le1h, 1h_10h, 10h_3d, ge3d)");
  } else {
    for (int c = 0; c < retention::kCategoryCount; ++c) {
      const json& row = t["grid"][c];
      const std::string rp = "table.grid[" + std::to_string(c) + "]";
      if (!row.is_array() || row.size() != retention::kAgeBuckets) {
        rd.problems.push_back(rp + ": expected 5 entries");
        grid_ok = false;
        continue;
      }
      for (int b = 0; b < retention::kAgeBuckets; ++b) {
        if (!row[b].is_number_integer()) {
          rd.problems.push_back(rp + "[" + std::to_string(b) + "]: expected an integer");
          grid_ok = false;
        } else {
          grid[c][b] = row[b].get<int>();
        }
      }
    }
  }
  if (!grid_ok || modes.empty()) return std::nullopt;
  try {
    return retention::ModeAssignmentTable(name, modes, grid);
  } catch (const std::exception& e) {
    rd.problems.push_back(std::string("table: ") + e.what());
    return std::nullopt;
  }
}

}  // namespace

ConfigLoadError::ConfigLoadError(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

void apply_scale(SimConfig& cfg, const std::string& scale) {
  const flash::DeviceConfig s = flash::scaled_config(scale);
  cfg.device.chips = s.chips;
  cfg.device.blocks_per_chip = s.blocks_per_chip;
  cfg.device.pages_per_block = s.pages_per_block;
  cfg.device.endurance = s.endurance;
  cfg.scale = scale;
}

SimConfig parse_config(const std::string& text) {
  SimConfig cfg;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return cfg;

  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigLoadError({std::string("(root): ") + e.what()});
  }
  Reader rd;
  if (!rd.object(root, "(root)")) throw ConfigLoadError(rd.problems);
  rd.unknown_keys(root, "", {"scale", "device", "table", "policy", "run"});

  if (root.contains("scale")) {
    if (!root["scale"].is_string()) {
      rd.problems.push_back("scale: expected a string");
    } else {
      try {
        apply_scale(cfg, root["scale"].get<std::string>());
      } catch (const std::exception& e) {
        rd.problems.push_back(std::string("scale: ") + e.what());
      }
    }
  }
  if (root.contains("device") && rd.object(root["device"], "device")) read_device(rd, root["device"], cfg.device);
  if (root.contains("table")) {
    if (auto t = read_table(rd, root["table"])) cfg.table = *t;
  }
  if (root.contains("policy")) {
    if (!root["policy"].is_string()) {
      rd.problems.push_back("policy: expected a string");
    } else {
      try {
        cfg.policy = ftl::parse_policy(root["policy"].get<std::string>());
      } catch (const std::exception& e) {
        rd.problems.push_back(std::string("policy: ") + e.what());
      }
    }
  }
  if (root.contains("run") && rd.object(root["run"], "run")) {
    const json& r = root["run"];
    rd.unknown_keys(r, "run.", {"epoch_limit", "snapshot_fraction", "strict_integrity"});
    rd.uint_field(r, "run.", "epoch_limit", cfg.run.epoch_limit);
    rd.real_field(r, "run.", "snapshot_fraction", cfg.run.snapshot_fraction);
    rd.bool_field(r, "run.", "strict_integrity", cfg.run.strict_integrity);
    if (!(cfg.run.snapshot_fraction > 0.0 && cfg.run.snapshot_fraction <= 1.0)) {
      rd.problems.push_back("run.snapshot_fraction: must be in (0, 1]");
    }
    if (cfg.run.epoch_limit == 0) rd.problems.push_back("run.epoch_limit: must be > 0");
  }
  for (const auto& v : cfg.device.violations()) rd.problems.push_back("device." + v);
  if (!rd.problems.empty()) throw ConfigLoadError(rd.problems);
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigLoadError({path + ": cannot open"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const SimConfig& cfg) {
  const auto& d = cfg.device;
  json j;
  j["device"] = {{"chips", d.chips},
                 {"blocks_per_chip", d.blocks_per_chip},
                 {"pages_per_block", d.pages_per_block},
                 {"page_size_bytes", d.page_size_bytes},
                 {"endurance", d.endurance},
                 {"read_us", d.read_us},
                 {"write_us", d.write_us},
                 {"erase_us", d.erase_us},
                 {"transfer_mb_s", d.transfer_mb_s},
                 {"gc_clean_threshold", d.gc_clean_threshold},
                 {"scrub_period_s", d.scrub_period_s},
                 {"overprovision", d.overprovision},
                 {"dummy_write_multiplier", d.dummy_write_multiplier}};
  std::vector<int> modes;
  for (auto m : cfg.table.mode_set()) modes.push_back(m.states());
  json grid = json::array();
  for (const auto& row : cfg.table.grid()) grid.push_back(std::vector<int>(row.begin(), row.end()));
  j["table"] = {{"name", cfg.table.name()}, {"modes", modes}, {"grid", grid}};
  j["policy"] = std::string(ftl::policy_name(cfg.policy));
  j["run"] = {{"epoch_limit", cfg.run.epoch_limit},
              {"snapshot_fraction", cfg.run.snapshot_fraction},
              {"strict_integrity", cfg.run.strict_integrity}};
  return j.dump(2) + "\n";
}

void save_config(const SimConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << dump_config(cfg);
}

}  // namespace dslc::config
