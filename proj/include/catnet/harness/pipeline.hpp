#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "catnet/adpsel/adpsel.hpp"
#include "catnet/harness/config.hpp"
#include "catnet/stsync/stsync.hpp"
#include "catnet/wtden/wtden.hpp"

namespace catnet::harness {

// Everything the ego has at one tick, independent of model parameters.
struct Frame {
  Tensor stack;   // N x C x H x W: ego feature, then transformed collaborator packets
  Tensor ego;     // C x H x W, the ego's own current feature
  Tensor gt;      // 1 x H x W occupancy of all objects in the ego frame
  Tensor clean;   // C x H x W: max over agents of current, true-pose transformed features
  long staleness = -1;  // oldest collaborator packet age in ticks, -1 without any
};

struct Episode {
  std::vector<Frame> frames;
  std::vector<simworld::TraceRow> trace;
};

Episode simulate_episode(const simworld::Scenario& scenario, const simworld::GridSpec& grid);

// Seed of scenario `index` in a named stream derived from `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
inline constexpr std::uint64_t kTrainStream = 1;
inline constexpr std::uint64_t kEvalStream = 2;

struct PipelineOutput {
  Var feature;  // C x H x W, decoder input
  Var logits;   // 1 x H x W
};

// The full pipeline. Every module's parameters exist regardless of toggles;
// a disabled module is skipped entirely.
class CatNet {
 public:
  CatNet(const PipelineConfig& cfg, std::uint64_t seed);
  CatNet(const CatNet&) = delete;
  CatNet& operator=(const CatNet&) = delete;

  ParameterSet params;
  stsync::StSync stsync;
  wtden::WtDen wtden;
  adpsel::AdpSel adpsel;
  Var decoder_weight, decoder_bias;  // 1 x C x 1 x 1, 1
  ModuleToggles modules;

  // Agent integration of one tick's stack.
  Var fuse(const Tensor& stack) const;
  // window: the K most recent fused features, oldest first.
  PipelineOutput forward(const std::vector<Var>& window, const Var& ego) const;
};

struct AgeBin {
  double iou = 0.0;
  double mse_to_clean = 0.0;
  std::size_t frames = 0;
};

// Occupancy IoU (pooled over frames, threshold 0.5) and feature MSE to the
// clean fused feature. Proxies for detection metrics.
struct MetricRecord {
  std::string config_id;
  std::uint64_t seed = 0;
  ChannelSettings channel;
  double retention = 0.0;
  double mse_to_clean = 0.0;
  double iou = 0.0;
  std::size_t frames = 0;
  std::map<long, AgeBin> by_staleness;  // keyed by Frame::staleness
};

std::vector<simworld::Scenario> eval_scenarios(const PipelineConfig& cfg);

// Evaluates every tick after warm-up of each scenario.
MetricRecord run_pipeline(const CatNet& model, const PipelineConfig& cfg,
                          const std::vector<simworld::Scenario>& scenarios,
                          std::vector<simworld::TraceRow>* trace = nullptr);
// Validates cfg, builds an untrained model seeded by training.seed and runs one scenario.
MetricRecord run_pipeline(const PipelineConfig& cfg, const simworld::Scenario& scenario);
MetricRecord evaluate(const CatNet& model, const PipelineConfig& cfg);

// Loss of one training episode's final tick.
Var episode_loss(const CatNet& model, const PipelineConfig& cfg, const Episode& episode);

}  // namespace catnet::harness
