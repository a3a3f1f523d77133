#include "catnet/harness/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "catnet/numerics/init.hpp"
#include "catnet/numerics/ops.hpp"
#include "catnet/simworld/render.hpp"

namespace catnet::harness {

using simworld::GridSpec;
using simworld::Scenario;

namespace {

Tensor stack_tensors(const std::vector<Tensor>& parts) {
  Shape s = parts.front().shape();
  s.insert(s.begin(), parts.size());
  Tensor out(s);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), out.data().begin() + off);
    off += p.numel();
  }
  return out;
}

struct Accumulator {
  double inter = 0.0, uni = 0.0, mse = 0.0;
  std::size_t frames = 0;

  void add(const Tensor& logits, const Tensor& gt, double frame_mse) {
    for (std::size_t i = 0; i < gt.numel(); ++i) {
      const bool p = logits[i] > 0.0, g = gt[i] > 0.5;
      inter += p && g;
      uni += p || g;
    }
    mse += frame_mse;
    ++frames;
  }
  double iou() const { return uni > 0.0 ? inter / uni : 1.0; }
  double mean_mse() const { return frames ? mse / double(frames) : 0.0; }
};

}  // namespace

Episode simulate_episode(const Scenario& sc, const GridSpec& grid) {
  simworld::Channel channel(sc.channel);
  simworld::Scene scene = sc.scene;
  const simworld::AgentSpec& ego = sc.agents.front();
  const double everywhere = std::numeric_limits<double>::infinity();
  struct Latest {
    bool valid = false;
    simworld::FeaturePacket packet;
  };
  std::vector<Latest> latest(sc.agents.size());
  Episode ep;
  for (Tick t = 0; t < sc.ticks; ++t) {
    Frame f;
    std::vector<FeatureGrid> current;
    for (const auto& a : sc.agents) {
      current.push_back(simworld::render_bev(scene, a.pose, grid, a.fov, a.id, t));
    }
    for (std::size_t i = 1; i < sc.agents.size(); ++i) {
      channel.emit(current[i], static_cast<int>(i), t, sc.agents[i].pose);
    }
    for (auto& p : channel.deliver(t)) {
      Latest& slot = latest[static_cast<std::size_t>(p.sender)];
      if (!slot.valid || p.emit_tick > slot.packet.emit_tick) slot = {true, std::move(p)};
    }
    std::vector<Tensor> parts{current[0].data.value()};
    Tensor clean = current[0].data.value();
    for (std::size_t i = 1; i < sc.agents.size(); ++i) {
      Tensor truth =
          simworld::transform_to_ego(current[i], sc.agents[i].pose, ego.pose, grid).data.value();
      for (std::size_t k = 0; k < clean.numel(); ++k) clean[k] = std::max(clean[k], truth[k]);
      if (!latest[i].valid) continue;
      const auto& p = latest[i].packet;
      parts.push_back(
          simworld::transform_to_ego(p.feature, p.reported_pose, ego.pose, grid).data.value());
      f.staleness = std::max(f.staleness, static_cast<long>(t - p.emit_tick));
    }
    f.stack = stack_tensors(parts);
    f.ego = current[0].data.value();
    f.gt = simworld::render_occupancy(scene, ego.pose, grid, everywhere).reshaped({1, grid.height, grid.width});
    f.clean = std::move(clean);
    ep.frames.push_back(std::move(f));
    scene = simworld::step_scene(scene);
  }
  ep.trace = channel.trace();
  return ep;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 over the combined words.
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL ^ (stream << 48) ^ index;
  for (int i = 0; i < 2; ++i) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
  }
  return z;
}

namespace {

stsync::StSyncConfig stsync_config(const PipelineConfig& c) {
  stsync::StSyncConfig s;
  s.channels = c.channels;
  s.dca_points = c.dca_points;
  return s;
}

adpsel::AdpSelConfig adpsel_config(const PipelineConfig& c) {
  adpsel::AdpSelConfig a;
  a.channels = c.channels;
  a.scales = c.scales;
  a.k = c.retention;
  return a;
}

}  // namespace

CatNet::CatNet(const PipelineConfig& cfg, std::uint64_t seed)
    : stsync(params, stsync_config(cfg), seed),
      wtden(params, {cfg.channels, cfg.state_dim}, seed),
      adpsel(params, adpsel_config(cfg), seed),
      modules(cfg.modules) {
  auto rng = init::module_rng(seed, "decoder");
  decoder_weight = params.add("decoder.weight",
                              init::scaled_uniform({1, cfg.channels, 1, 1}, cfg.channels, rng));
  decoder_bias = params.add("decoder.bias", Tensor({1}));
}

Var CatNet::fuse(const Tensor& stack) const { return stsync.integrate_agents(Var(stack)); }

PipelineOutput CatNet::forward(const std::vector<Var>& window, const Var& ego) const {
  if (window.empty()) throw std::invalid_argument("CatNet::forward: empty window");
  Var x = modules.stsync ? stsync.dca_refine(stsync.taru_rollout(window), ego) : window.back();
  if (modules.wtden) x = wtden.forward(x);
  if (modules.adpsel) x = adpsel.forward(x);
  return {x, conv2d(x, decoder_weight, decoder_bias)};
}

std::vector<Scenario> eval_scenarios(const PipelineConfig& cfg) {
  const simworld::ScenarioSpec spec = cfg.scenario_spec(cfg.warmup_ticks() + cfg.eval.ticks);
  std::vector<Scenario> out;
  for (std::size_t i = 0; i < cfg.eval.scenarios; ++i) {
    out.push_back(simworld::make_scenario(spec, derive_seed(cfg.training.seed, kEvalStream, i)));
  }
  return out;
}

MetricRecord run_pipeline(const CatNet& model, const PipelineConfig& cfg,
                          const std::vector<Scenario>& scenarios,
                          std::vector<simworld::TraceRow>* trace) {
  cfg.validate();
  NoGradGuard no_grad;
  const std::size_t k = cfg.buffer;
  const long warmup = cfg.warmup_ticks();
  Accumulator total;
  std::map<long, Accumulator> bins;
  for (const auto& sc : scenarios) {
    Episode ep = simulate_episode(sc, cfg.grid);
    if (trace) trace->insert(trace->end(), ep.trace.begin(), ep.trace.end());
    const long n = static_cast<long>(ep.frames.size());
    std::vector<Var> fused(ep.frames.size());
    for (long t = std::max(0L, warmup - static_cast<long>(k) + 1); t < n; ++t) {
      fused[t] = model.fuse(ep.frames[t].stack);
    }
    for (long t = warmup; t < n; ++t) {
      if (t + 1 < static_cast<long>(k)) continue;
      std::vector<Var> window(fused.begin() + (t + 1 - static_cast<long>(k)), fused.begin() + t + 1);
      const Frame& f = ep.frames[t];
      PipelineOutput out = model.forward(window, Var(f.ego));
      const double m = mse(out.feature, f.clean).value().item();
      total.add(out.logits.value(), f.gt, m);
      bins[f.staleness].add(out.logits.value(), f.gt, m);
    }
  }
  MetricRecord r;
  r.config_id = cfg.id;
  r.seed = cfg.training.seed;
  r.channel = cfg.channel;
  r.retention = cfg.retention;
  r.iou = total.iou();
  r.mse_to_clean = total.mean_mse();
  r.frames = total.frames;
  for (const auto& [age, acc] : bins) r.by_staleness[age] = {acc.iou(), acc.mean_mse(), acc.frames};
  return r;
}

MetricRecord run_pipeline(const PipelineConfig& cfg, const Scenario& scenario) {
  cfg.validate();
  CatNet model(cfg, cfg.training.seed);
  return run_pipeline(model, cfg, {scenario});
}

MetricRecord evaluate(const CatNet& model, const PipelineConfig& cfg) {
  return run_pipeline(model, cfg, eval_scenarios(cfg));
}

Var episode_loss(const CatNet& model, const PipelineConfig& cfg, const Episode& ep) {
  const std::size_t k = cfg.buffer;
  if (ep.frames.size() < k) throw std::invalid_argument("episode shorter than the buffer");
  std::vector<Var> window;
  for (std::size_t t = ep.frames.size() - k; t < ep.frames.size(); ++t) {
    window.push_back(model.fuse(ep.frames[t].stack));
  }
  const Frame& f = ep.frames.back();
  PipelineOutput out = model.forward(window, Var(f.ego));
  Var loss = bce_with_logits(out.logits, f.gt);
  if (cfg.training.mse_weight > 0.0) {
    loss = add(loss, scale(mse(out.feature, f.clean), cfg.training.mse_weight));
  }
  return loss;
}

}  // namespace catnet::harness
