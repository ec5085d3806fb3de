#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dslc/engine.hpp"
#include "dslc/flash.hpp"
#include "dslc/ftl.hpp"
#include "dslc/retention.hpp"

namespace dslc::config {

struct SimConfig {
  flash::DeviceConfig device;
  retention::ModeAssignmentTable table = retention::preset_table("normal3");
  ftl::Policy policy = ftl::Policy::Dslc;
  engine::RunOptions run;
  /// Named geometry applied before the explicit device fields.
  std::optional<std::string> scale;
};

/// Every problem found, each prefixed with its field path.
class ConfigLoadError : public std::runtime_error {
 public:
  explicit ConfigLoadError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::string& path);
std::string dump_config(const SimConfig& cfg);
void save_config(const SimConfig& cfg, const std::string& path);

/// Replaces chips, blocks, pages and endurance with a named geometry.
void apply_scale(SimConfig& cfg, const std::string& scale);

}  // namespace dslc::config
