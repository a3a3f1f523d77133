#pragma once

#include <cstdint>
#include <vector>

#include "catnet/numerics/autograd.hpp"
#include "catnet/stsync/feature_buffer.hpp"

namespace catnet::stsync {

struct StSyncConfig {
  std::size_t channels = 8;
  std::size_t dca_points = 4;       // sampling points per query
  std::size_t gate_reduction = 4;   // channel-attention MLP reduction
  std::size_t gate_spatial_kernel = 7;
};

struct GateOutput {
  Var alpha;  // C x H x W, strictly inside (0, 1)
  Var fused;  // (1 - alpha) * hidden + alpha * warped
};

// 3x3 conv applied after the bilinear resampling of a deformable warp.
struct WarpWeights {
  Var weight;
  Var bias;
};

// Spatio-temporal synchronization: agent integration, the recurrent
// predict/warp/gate/update rollout over the history buffer, and deformable
// cross-attention against the ego feature. Weights are shared across steps.
class StSync {
 public:
  StSync(ParameterSet& params, StSyncConfig config, std::uint64_t seed);

  const StSyncConfig& config() const { return config_; }

  // agents: N x C x H x W -> C x H x W. Max- and avg-pool over N, then a 3D
  // convolution with depth kernel 2 collapsing the two pooled maps. With depth
  // kernel equal to depth, that is a 2D conv over the depth-major stacked
  // channels [max; avg].
  Var integrate_agents(const Var& agents) const;

  // Offsets (2 x H x W, row/col in pixels) from two consecutive entries.
  Var predict_offset(const Var& prev2, const Var& prev1) const;

  // Bilinear warp by `offsets`, then the motion warp's 3x3 conv.
  Var deform_warp(const Var& feature, const Var& offsets) const;

  GateOutput st_gate(const Var& hidden, const Var& warped) const;

  // Hidden-state refinement: a conv of `state` predicts offsets and a second
  // deformable warp applies them to `state`.
  Var update(const Var& state) const;

  // H_1 = B_1; for i >= 2: offset, warp, gate, update. Returns H_K.
  Var taru_rollout(const std::vector<Var>& buffer) const;
  Var taru_rollout(const FeatureBuffer& buffer) const;

  // predicted + sum_m softmax(logits)_m * ego(query + offset_m).
  Var dca_refine(const Var& predicted, const Var& ego) const;

  // Sampling offsets (2M x H x W) and logits (M x H x W) of the cross-attention.
  std::pair<Var, Var> dca_offsets_and_logits(const Var& predicted) const;

  // Parameter handles, exposed for pinning in tests and tools.
  Var integrate_weight, integrate_bias;
  Var offset_weight, offset_bias;
  WarpWeights motion_warp;
  Var gate_spatial_weight, gate_spatial_bias;
  Var gate_fc1_weight, gate_fc1_bias, gate_fc2_weight, gate_fc2_bias;
  Var update_offset_weight, update_offset_bias;
  WarpWeights update_warp;
  Var dca_weight, dca_bias;

 private:
  StSyncConfig config_;
};

// Warp by offsets then conv; shared by the motion and update warps.
Var deform_warp(const Var& feature, const Var& offsets, const WarpWeights& conv);

}  // namespace catnet::stsync
