#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "catnet/simworld/render.hpp"
#include "catnet/simworld/scenario.hpp"

namespace catnet::harness {

// Invalid configuration; the CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModuleToggles {
  bool stsync = true;
  bool wtden = true;
  bool adpsel = true;

  bool operator==(const ModuleToggles&) const = default;
};

// Channel degradation in experiment units: latency in ticks (100 ms each),
// location noise in meters, heading noise in multiples of pi/18 rad.
struct ChannelSettings {
  long latency_ticks = 3;
  double drop_p = 0.0;
  double loc_noise = 0.2;
  double head_noise = 0.2;

  simworld::ChannelConfig to_channel() const;
};

struct WorldSettings {
  std::size_t agents = 3;
  std::size_t objects = 8;
  double ego_fov = 10.0;
  double collaborator_fov = 14.0;
  double collaborator_radius = 12.0;
  double half_extent = 24.0;  // world bounds are [-e, e] squared
  double min_size = 1.5, max_size = 4.0;
  double min_speed = 0.3, max_speed = 1.2;
};

struct TrainingSettings {
  long steps = 500;
  double lr = 1e-3;
  std::size_t batch = 1;
  std::uint64_t seed = 0;
  double mse_weight = 0.1;
};

struct EvalSettings {
  std::size_t scenarios = 4;
  long ticks = 16;  // evaluated ticks per scenario, after warm-up
};

struct PipelineConfig {
  std::string id = "full";
  simworld::GridSpec grid;
  std::size_t channels = simworld::kFeatureChannels;
  std::size_t buffer = 4;
  std::vector<std::size_t> scales = {4, 8};
  double retention = 0.3;
  std::size_t state_dim = 16;
  std::size_t dca_points = 4;
  ChannelSettings channel;
  WorldSettings world;
  TrainingSettings training;
  EvalSettings eval;
  ModuleToggles modules;

  // Throws ConfigError describing the first violated constraint.
  void validate() const;

  // Ticks simulated before the first evaluated tick: the buffer fills and the
  // slowest packet of the first tick has arrived.
  long warmup_ticks() const { return static_cast<long>(buffer) - 1 + channel.latency_ticks; }

  simworld::ScenarioSpec scenario_spec(long ticks) const;
};

nlohmann::json config_to_json(const PipelineConfig& cfg);
// Missing fields keep their defaults; unknown fields and bad values throw ConfigError.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

// Toggle combinations of the ablation table, in row order.
struct AblationRow {
  std::string id;
  ModuleToggles modules;
};
const std::vector<AblationRow>& ablation_rows();

}  // namespace catnet::harness
