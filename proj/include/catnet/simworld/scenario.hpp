#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "catnet/simworld/channel.hpp"
#include "catnet/simworld/scene.hpp"

namespace catnet::simworld {

struct AgentSpec {
  int id = 0;
  Pose2D pose;
  double fov = 12.0;  // sensing radius, meters
};

// A complete simulation setup. agents[0] is the ego vehicle.
struct Scenario {
  std::uint64_t seed = 0;
  long ticks = 0;
  std::vector<AgentSpec> agents;
  Scene scene;
  ChannelConfig channel;
};

struct ScenarioSpec {
  long ticks = 24;
  std::size_t agents = 3;
  double ego_fov = 10.0;
  double collaborator_fov = 14.0;
  double collaborator_radius = 12.0;  // distance of collaborators from the ego
  SceneSpec scene;
  ChannelConfig channel;
};

// Ego at the origin facing +x; collaborators evenly spaced on a ring with
// random headings and a random ring phase. The channel is seeded with `seed`.
Scenario make_scenario(const ScenarioSpec& spec, std::uint64_t seed);

// Schema: {seed, ticks, agents:[{id, pose:{x, y, heading}, fov_m}],
// objects:[{x, y, w, h, vx, vy}], bounds:{xmin, ymin, xmax, ymax},
// channel:{L_ticks, drop_p, loc_sigma, head_sigma}}. bounds is optional.
nlohmann::json scenario_to_json(const Scenario& s);
// Throws std::invalid_argument naming the offending field.
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& s, const std::filesystem::path& path);

}  // namespace catnet::simworld
