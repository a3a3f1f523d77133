#include "catnet/simworld/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace catnet::simworld {

using nlohmann::json;

Scenario make_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  if (spec.agents == 0) throw std::invalid_argument("scenario needs at least one agent");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  Scenario s;
  s.seed = seed;
  s.ticks = spec.ticks;
  // Scene first, so the object layout does not depend on the agent count.
  s.scene = random_scene(spec.scene, rng());
  s.scene.seed = seed;
  s.agents.push_back({0, {0.0, 0.0, 0.0}, spec.ego_fov});
  const double phase = angle(rng);
  const std::size_t n = spec.agents - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = phase + 2.0 * std::numbers::pi * double(i) / double(n);
    s.agents.push_back({static_cast<int>(i + 1),
                        {spec.collaborator_radius * std::cos(a),
                         spec.collaborator_radius * std::sin(a), wrap_angle(angle(rng))},
                        spec.collaborator_fov});
  }
  s.channel = spec.channel;
  s.channel.seed = seed;
  return s;
}

json scenario_to_json(const Scenario& s) {
  json agents = json::array();
  for (const auto& a : s.agents) {
    agents.push_back({{"id", a.id},
                      {"pose", {{"x", a.pose.x}, {"y", a.pose.y}, {"heading", a.pose.heading}}},
                      {"fov_m", a.fov}});
  }
  json objects = json::array();
  for (const auto& o : s.scene.objects) {
    objects.push_back({{"x", o.x}, {"y", o.y}, {"w", o.w}, {"h", o.h}, {"vx", o.vx}, {"vy", o.vy}});
  }
  const Bounds& b = s.scene.bounds;
  return {{"seed", s.seed},
          {"ticks", s.ticks},
          {"agents", agents},
          {"objects", objects},
          {"bounds", {{"xmin", b.xmin}, {"ymin", b.ymin}, {"xmax", b.xmax}, {"ymax", b.ymax}}},
          {"channel",
           {{"L_ticks", s.channel.max_latency_ticks},
            {"drop_p", s.channel.drop_probability},
            {"loc_sigma", s.channel.loc_sigma},
            {"head_sigma", s.channel.head_sigma}}}};
}

namespace {

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw std::invalid_argument("scenario: missing field " + where + key);
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("scenario: field " + where + key + " has the wrong type");
  }
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  Scenario s;
  s.seed = field<std::uint64_t>(j, "seed", "");
  s.ticks = field<long>(j, "ticks", "");
  if (s.ticks < 1) throw std::invalid_argument("scenario: ticks must be >= 1");
  const json agents = field<json>(j, "agents", "");
  if (!agents.is_array() || agents.empty()) {
    throw std::invalid_argument("scenario: agents must be a non-empty array");
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string where = "agents[" + std::to_string(i) + "].";
    const json pose = field<json>(agents[i], "pose", where);
    AgentSpec a;
    a.id = field<int>(agents[i], "id", where);
    a.pose = {field<double>(pose, "x", where + "pose."), field<double>(pose, "y", where + "pose."),
              wrap_angle(field<double>(pose, "heading", where + "pose."))};
    a.fov = field<double>(agents[i], "fov_m", where);
    if (!(a.fov > 0.0)) throw std::invalid_argument("scenario: " + where + "fov_m must be positive");
    s.agents.push_back(a);
  }
  const json objects = field<json>(j, "objects", "");
  if (!objects.is_array()) throw std::invalid_argument("scenario: objects must be an array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string where = "objects[" + std::to_string(i) + "].";
    SceneObject o;
    o.x = field<double>(objects[i], "x", where);
    o.y = field<double>(objects[i], "y", where);
    o.w = field<double>(objects[i], "w", where);
    o.h = field<double>(objects[i], "h", where);
    o.vx = field<double>(objects[i], "vx", where);
    o.vy = field<double>(objects[i], "vy", where);
    if (!(o.w > 0.0 && o.h > 0.0)) {
      throw std::invalid_argument("scenario: " + where + "w and h must be positive");
    }
    s.scene.objects.push_back(o);
  }
  if (j.contains("bounds")) {
    const json& b = j["bounds"];
    s.scene.bounds = {field<double>(b, "xmin", "bounds."), field<double>(b, "ymin", "bounds."),
                      field<double>(b, "xmax", "bounds."), field<double>(b, "ymax", "bounds.")};
  } else {
    s.scene.bounds = SceneSpec{}.bounds;
  }
  if (!(s.scene.bounds.xmax > s.scene.bounds.xmin && s.scene.bounds.ymax > s.scene.bounds.ymin)) {
    throw std::invalid_argument("scenario: bounds are empty");
  }
  s.scene.seed = s.seed;
  const json ch = field<json>(j, "channel", "");
  s.channel.max_latency_ticks = field<long>(ch, "L_ticks", "channel.");
  s.channel.drop_probability = field<double>(ch, "drop_p", "channel.");
  s.channel.loc_sigma = field<double>(ch, "loc_sigma", "channel.");
  s.channel.head_sigma = field<double>(ch, "head_sigma", "channel.");
  s.channel.seed = s.seed;
  s.channel.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("scenario " + path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file " + path.string());
  out << scenario_to_json(s).dump(2) << '\n';
}

}  // namespace catnet::simworld
