#include "catnet/harness/config.hpp"

#include <fstream>
#include <numbers>
#include <set>

namespace catnet::harness {

using nlohmann::json;

simworld::ChannelConfig ChannelSettings::to_channel() const {
  simworld::ChannelConfig c;
  c.max_latency_ticks = latency_ticks;
  c.drop_probability = drop_p;
  c.loc_sigma = loc_noise;
  c.head_sigma = head_noise * std::numbers::pi / 18.0;
  return c;
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
  if (grid.height == 0 || grid.width == 0 || grid.height % 4 || grid.width % 4) {
    fail("grid height and width must be positive multiples of 4");
  }
  if (!(grid.cell > 0.0)) fail("grid cell must be positive");
  if (channels != simworld::kFeatureChannels) {
    fail("channels must be " + std::to_string(simworld::kFeatureChannels) +
         " (the rendered feature layout)");
  }
  if (buffer == 0) fail("buffer must be >= 1");
  if (scales.empty()) fail("scales must be non-empty");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const std::size_t s = scales[i];
    if (s == 0 || (s & (s - 1)) || grid.height % s || grid.width % s) {
      fail("scale " + std::to_string(s) + " must be a power of two dividing the grid");
    }
    if (i > 0 && s <= scales[i - 1]) fail("scales must be strictly increasing");
  }
  if (!(retention > 0.0 && retention <= 1.0)) fail("retention must lie in (0, 1]");
  if (state_dim == 0 || dca_points == 0) fail("state_dim and dca_points must be >= 1");
  if (channel.latency_ticks < 0) fail("channel latency must be >= 0");
  if (!(channel.drop_p >= 0.0 && channel.drop_p <= 1.0)) fail("drop_p must lie in [0, 1]");
  if (!(channel.loc_noise >= 0.0 && channel.head_noise >= 0.0)) fail("noise must be >= 0");
  if (world.agents == 0) fail("world needs at least the ego agent");
  if (!(world.ego_fov > 0 && world.collaborator_fov > 0)) fail("fov must be positive");
  if (!(world.min_size > 0 && world.max_size >= world.min_size)) fail("bad object size range");
  if (!(world.min_speed >= 0 && world.max_speed >= world.min_speed)) fail("bad speed range");
  if (!(2 * world.half_extent > world.max_size)) fail("world too small for objects");
  if (training.steps < 1) fail("training.steps must be >= 1");
  if (!(training.lr >= 0.0)) fail("training.lr must be >= 0");
  if (training.batch == 0) fail("training.batch must be >= 1");
  if (!(training.mse_weight >= 0.0)) fail("training.mse_weight must be >= 0");
  if (eval.scenarios == 0 || eval.ticks < 1) fail("eval needs >= 1 scenario and tick");
}

simworld::ScenarioSpec PipelineConfig::scenario_spec(long ticks) const {
  simworld::ScenarioSpec s;
  s.ticks = ticks;
  s.agents = world.agents;
  s.ego_fov = world.ego_fov;
  s.collaborator_fov = world.collaborator_fov;
  s.collaborator_radius = world.collaborator_radius;
  s.scene.objects = world.objects;
  const double e = world.half_extent;
  s.scene.bounds = {-e, -e, e, e};
  s.scene.min_size = world.min_size;
  s.scene.max_size = world.max_size;
  s.scene.min_speed = world.min_speed;
  s.scene.max_speed = world.max_speed;
  s.channel = channel.to_channel();
  return s;
}

json config_to_json(const PipelineConfig& c) {
  return {
      {"id", c.id},
      {"grid", {{"height", c.grid.height}, {"width", c.grid.width}, {"cell", c.grid.cell}}},
      {"channels", c.channels},
      {"buffer", c.buffer},
      {"scales", c.scales},
      {"retention", c.retention},
      {"state_dim", c.state_dim},
      {"dca_points", c.dca_points},
      {"channel",
       {{"latency_ticks", c.channel.latency_ticks},
        {"drop_p", c.channel.drop_p},
        {"loc_noise", c.channel.loc_noise},
        {"head_noise", c.channel.head_noise}}},
      {"world",
       {{"agents", c.world.agents},
        {"objects", c.world.objects},
        {"ego_fov", c.world.ego_fov},
        {"collaborator_fov", c.world.collaborator_fov},
        {"collaborator_radius", c.world.collaborator_radius},
        {"half_extent", c.world.half_extent},
        {"min_size", c.world.min_size},
        {"max_size", c.world.max_size},
        {"min_speed", c.world.min_speed},
        {"max_speed", c.world.max_speed}}},
      {"training",
       {{"steps", c.training.steps},
        {"lr", c.training.lr},
        {"batch", c.training.batch},
        {"seed", c.training.seed},
        {"mse_weight", c.training.mse_weight}}},
      {"eval", {{"scenarios", c.eval.scenarios}, {"ticks", c.eval.ticks}}},
      {"modules",
       {{"stsync", c.modules.stsync}, {"wtden", c.modules.wtden}, {"adpsel", c.modules.adpsel}}},
  };
}

namespace {

// Reads known keys of one JSON object into fields and rejects any other key.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError("config: " + name() + " must be an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("config: unknown field " + where_ + key);
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: field " + where_ + key + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  std::string name() const { return where_.empty() ? "document" : where_; }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  {
    Reader r(j, "");
    r.read("id", c.id);
    r.read("channels", c.channels);
    r.read("buffer", c.buffer);
    r.read("scales", c.scales);
    r.read("retention", c.retention);
    r.read("state_dim", c.state_dim);
    r.read("dca_points", c.dca_points);
    if (const json* g = r.child("grid")) {
      Reader rg(*g, "grid.");
      rg.read("height", c.grid.height);
      rg.read("width", c.grid.width);
      rg.read("cell", c.grid.cell);
    }
    if (const json* ch = r.child("channel")) {
      Reader rc(*ch, "channel.");
      rc.read("latency_ticks", c.channel.latency_ticks);
      rc.read("drop_p", c.channel.drop_p);
      rc.read("loc_noise", c.channel.loc_noise);
      rc.read("head_noise", c.channel.head_noise);
    }
    if (const json* w = r.child("world")) {
      Reader rw(*w, "world.");
      rw.read("agents", c.world.agents);
      rw.read("objects", c.world.objects);
      rw.read("ego_fov", c.world.ego_fov);
      rw.read("collaborator_fov", c.world.collaborator_fov);
      rw.read("collaborator_radius", c.world.collaborator_radius);
      rw.read("half_extent", c.world.half_extent);
      rw.read("min_size", c.world.min_size);
      rw.read("max_size", c.world.max_size);
      rw.read("min_speed", c.world.min_speed);
      rw.read("max_speed", c.world.max_speed);
    }
    if (const json* t = r.child("training")) {
      Reader rt(*t, "training.");
      rt.read("steps", c.training.steps);
      rt.read("lr", c.training.lr);
      rt.read("batch", c.training.batch);
      rt.read("seed", c.training.seed);
      rt.read("mse_weight", c.training.mse_weight);
    }
    if (const json* e = r.child("eval")) {
      Reader re(*e, "eval.");
      re.read("scenarios", c.eval.scenarios);
      re.read("ticks", c.eval.ticks);
    }
    if (const json* m = r.child("modules")) {
      Reader rm(*m, "modules.");
      rm.read("stsync", c.modules.stsync);
      rm.read("wtden", c.modules.wtden);
      rm.read("adpsel", c.modules.adpsel);
    }
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

const std::vector<AblationRow>& ablation_rows() {
  static const std::vector<AblationRow> rows = {
      {"baseline", {false, false, false}},     {"stsync", {true, false, false}},
      {"wtden", {false, true, false}},         {"adpsel", {false, false, true}},
      {"stsync+wtden", {true, true, false}},   {"stsync+adpsel", {true, false, true}},
      {"full", {true, true, true}},
  };
  return rows;
}

}  // namespace catnet::harness
