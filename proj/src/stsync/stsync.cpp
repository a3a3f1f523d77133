#include "catnet/stsync/stsync.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "catnet/numerics/init.hpp"
#include "catnet/numerics/ops.hpp"

namespace catnet::stsync {

namespace {

void require_same(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  }
  if (a.shape().size() != 3) {
    throw std::invalid_argument(std::string(op) + ": expected C x H x W, got " +
                                shape_str(a.shape()));
  }
}

Tensor perturbed(Tensor base, std::mt19937_64& rng, double amplitude) {
  std::uniform_real_distribution<double> d(-amplitude, amplitude);
  for (auto& v : base.data()) v += d(rng);
  return base;
}

}  // namespace

StSync::StSync(ParameterSet& params, StSyncConfig config, std::uint64_t seed) : config_(config) {
  const std::size_t c = config_.channels;
  const std::size_t m = config_.dca_points;
  const std::size_t ks = config_.gate_spatial_kernel;
  const std::size_t hidden = std::max<std::size_t>(1, 2 * c / config_.gate_reduction);
  auto rng = init::module_rng(seed, "stsync");

  Tensor integ = init::identity_kernel(c, 2 * c, 3, 0);
  integ += init::identity_kernel(c, 2 * c, 3, c);
  integ *= 0.5;
  integrate_weight = params.add("stsync.integrate.weight", perturbed(integ, rng, 0.02));
  integrate_bias = params.add("stsync.integrate.bias", Tensor({c}));

  offset_weight = params.add("stsync.offset.weight", Tensor({2, 2 * c, 3, 3}));
  offset_bias = params.add("stsync.offset.bias", Tensor({2}));
  motion_warp.weight = params.add("stsync.warp.weight", init::identity_kernel(c, c, 3));
  motion_warp.bias = params.add("stsync.warp.bias", Tensor({c}));

  gate_spatial_weight = params.add("stsync.gate.spatial.weight",
                                   init::scaled_uniform({1, 2 * c, ks, ks}, 2 * c * ks * ks, rng));
  gate_spatial_bias = params.add("stsync.gate.spatial.bias", Tensor({1}));
  gate_fc1_weight =
      params.add("stsync.gate.fc1.weight", init::scaled_uniform({2 * c, hidden}, 2 * c, rng));
  gate_fc1_bias = params.add("stsync.gate.fc1.bias", Tensor({hidden}));
  gate_fc2_weight =
      params.add("stsync.gate.fc2.weight", init::scaled_uniform({hidden, c}, hidden, rng));
  gate_fc2_bias = params.add("stsync.gate.fc2.bias", Tensor({c}));

  update_offset_weight = params.add("stsync.update.offset.weight", Tensor({2, c, 3, 3}));
  update_offset_bias = params.add("stsync.update.offset.bias", Tensor({2}));
  update_warp.weight = params.add("stsync.update.warp.weight", init::identity_kernel(c, c, 3));
  update_warp.bias = params.add("stsync.update.warp.bias", Tensor({c}));

  // Offsets start on a unit ring around the query; logits start uniform.
  Tensor dca_b({3 * m});
  for (std::size_t i = 0; i < m; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(m);
    dca_b[2 * i] = std::round(std::sin(angle) * 1e6) / 1e6;
    dca_b[2 * i + 1] = std::round(std::cos(angle) * 1e6) / 1e6;
  }
  dca_weight = params.add("stsync.dca.weight", init::scaled_uniform({3 * m, c, 1, 1}, c, rng, 0.1));
  dca_bias = params.add("stsync.dca.bias", dca_b);
}

Var StSync::integrate_agents(const Var& agents) const {
  const Shape& s = agents.shape();
  if (s.size() != 4 || s[0] == 0) {
    throw std::invalid_argument("integrate_agents: expected non-empty N x C x H x W stack, got " +
                                shape_str(s));
  }
  if (s[1] != config_.channels) {
    throw std::invalid_argument("integrate_agents: channel count " + std::to_string(s[1]) +
                                " does not match configured " + std::to_string(config_.channels));
  }
  Var pooled = concat({global_pool(agents, 0, PoolMode::kMax), global_pool(agents, 0, PoolMode::kAvg)},
                      0);
  return conv2d(pooled, integrate_weight, integrate_bias, {1, 1, 1});
}

Var StSync::predict_offset(const Var& prev2, const Var& prev1) const {
  require_same(prev2, prev1, "predict_offset");
  return conv2d(concat({prev2, prev1}, 0), offset_weight, offset_bias, {1, 1, 1});
}

Var deform_warp(const Var& feature, const Var& offsets, const WarpWeights& conv) {
  const Shape& fs = feature.shape();
  if (fs.size() != 3 || offsets.shape() != Shape{2, fs[1], fs[2]}) {
    throw std::invalid_argument("deform_warp: offsets " + shape_str(offsets.shape()) +
                                " incompatible with feature " + shape_str(fs));
  }
  Var coords = add(Var(identity_coords(fs[1], fs[2])), offsets);
  return conv2d(bilinear_sample(feature, coords), conv.weight, conv.bias, {1, 1, 1});
}

Var StSync::deform_warp(const Var& feature, const Var& offsets) const {
  return stsync::deform_warp(feature, offsets, motion_warp);
}

GateOutput StSync::st_gate(const Var& hidden, const Var& warped) const {
  require_same(hidden, warped, "st_gate");
  const Shape& s = hidden.shape();
  const std::size_t c = s[0];
  Var cat = concat({hidden, warped}, 0);
  const std::size_t pad = config_.gate_spatial_kernel / 2;
  Var spatial = conv2d(cat, gate_spatial_weight, gate_spatial_bias, {1, pad, 1});  // 1 x H x W
  Var squeezed = global_pool(reshape(cat, {2 * c, s[1] * s[2]}), 1, PoolMode::kAvg);
  Var hidden_units = relu(linear(reshape(squeezed, {1, 2 * c}), gate_fc1_weight, gate_fc1_bias));
  Var channel = linear(hidden_units, gate_fc2_weight, gate_fc2_bias);  // 1 x C
  Var pre = add(expand(spatial, s), expand(reshape(channel, {c, 1, 1}), s));
  Var alpha = sigmoid(pre);
  // (1 - a) * h + a * w, written so that h == w yields h exactly.
  Var fused = add(hidden, mul(alpha, sub(warped, hidden)));
  return {alpha, fused};
}

Var StSync::update(const Var& state) const {
  Var offsets = conv2d(state, update_offset_weight, update_offset_bias, {1, 1, 1});
  return stsync::deform_warp(state, offsets, update_warp);
}

Var StSync::taru_rollout(const std::vector<Var>& buffer) const {
  if (buffer.empty()) throw std::invalid_argument("taru_rollout: empty buffer");
  for (const auto& b : buffer) require_same(b, buffer.front(), "taru_rollout");
  Var hidden = buffer.front();
  const Var zero(Tensor(buffer.front().shape()));
  for (std::size_t i = 1; i < buffer.size(); ++i) {
    const Var& prev1 = buffer[i - 1];
    const Var& prev2 = i >= 2 ? buffer[i - 2] : zero;
    Var offsets = predict_offset(prev2, prev1);
    Var warped = deform_warp(prev1, offsets);
    Var state = st_gate(hidden, warped).fused;
    hidden = update(state);
  }
  return hidden;
}

Var StSync::taru_rollout(const FeatureBuffer& buffer) const {
  std::vector<Var> entries;
  for (const auto& e : buffer.entries()) entries.push_back(e.data);
  return taru_rollout(entries);
}

std::pair<Var, Var> StSync::dca_offsets_and_logits(const Var& predicted) const {
  const std::size_t m = config_.dca_points;
  Var proj = conv2d(predicted, dca_weight, dca_bias);
  return {slice(proj, 0, 0, 2 * m), slice(proj, 0, 2 * m, 3 * m)};
}

Var StSync::dca_refine(const Var& predicted, const Var& ego) const {
  require_same(predicted, ego, "dca_refine");
  const Shape& s = predicted.shape();
  const std::size_t m = config_.dca_points;
  auto [offsets, logits] = dca_offsets_and_logits(predicted);
  Var weights = softmax(logits, 0);
  const Var base(identity_coords(s[1], s[2]));
  Var out = predicted;
  for (std::size_t i = 0; i < m; ++i) {
    Var coords = add(base, slice(offsets, 0, 2 * i, 2 * i + 2));
    Var value = bilinear_sample(ego, coords);
    out = add(out, mul(expand(slice(weights, 0, i, i + 1), s), value));
  }
  return out;
}

}  // namespace catnet::stsync
