#include "catnet/adpsel/adpsel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "catnet/numerics/init.hpp"
#include "catnet/numerics/ops.hpp"

namespace catnet::adpsel {

namespace {

void require_plane(const Tensor& t, const BlockGrid& grid, const char* what) {
  if (t.shape() != Shape{grid.height, grid.width}) {
    throw std::invalid_argument(std::string(what) + ": expected " +
                                shape_str({grid.height, grid.width}) + ", got " +
                                shape_str(t.shape()));
  }
}

// Flat indices of every pixel whose block has mask value `want`, raster order,
// laid out token-major for a T x C gather from a C x H x W feature.
std::vector<std::size_t> token_index(const SelectionMask& sel, const BlockGrid& grid,
                                     std::size_t channels, std::uint8_t want) {
  const std::size_t hw = grid.height * grid.width;
  std::vector<std::size_t> index;
  for (std::size_t y = 0; y < grid.height; ++y)
    for (std::size_t x = 0; x < grid.width; ++x) {
      if (sel.block_mask[grid.block_of(y, x)] != want) continue;
      const std::size_t p = y * grid.width + x;
      for (std::size_t c = 0; c < channels; ++c) index.push_back(c * hw + p);
    }
  return index;
}

}  // namespace

BlockGrid::BlockGrid(std::size_t h, std::size_t w, std::size_t s) : height(h), width(w), scale(s) {
  if (s == 0 || h == 0 || w == 0 || h % s != 0 || w % s != 0) {
    throw std::invalid_argument("block scale " + std::to_string(s) + " does not divide " +
                                std::to_string(h) + "x" + std::to_string(w));
  }
}

Tensor block_means(const Tensor& feature, const BlockGrid& grid) {
  const Shape& s = feature.shape();
  if (s.size() != 3 || s[1] != grid.height || s[2] != grid.width) {
    throw std::invalid_argument("block_means: feature " + shape_str(s) + " does not match grid " +
                                shape_str({grid.height, grid.width}));
  }
  const std::size_t c = s[0];
  Tensor out({grid.count(), c});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < grid.height; ++y)
      for (std::size_t x = 0; x < grid.width; ++x)
        out[grid.block_of(y, x) * c + ch] += feature.at(ch, y, x);
  out *= 1.0 / static_cast<double>(grid.scale * grid.scale);
  return out;
}

std::vector<double> score_blocks(const Tensor& feature, const BlockGrid& grid,
                                 const Tensor& eligibility, const Tensor& selector_weight,
                                 double selector_bias) {
  require_plane(eligibility, grid, "score_blocks eligibility");
  const std::size_t c = feature.shape().at(0);
  if (selector_weight.numel() != c) {
    throw std::invalid_argument("score_blocks: selector " + shape_str(selector_weight.shape()) +
                                " for " + std::to_string(c) + " channels");
  }
  Tensor means = block_means(feature, grid);
  std::vector<double> coverage(grid.count(), 0.0);
  for (std::size_t y = 0; y < grid.height; ++y)
    for (std::size_t x = 0; x < grid.width; ++x)
      coverage[grid.block_of(y, x)] += eligibility.at(y, x);
  std::vector<double> scores(grid.count());
  for (std::size_t b = 0; b < grid.count(); ++b) {
    if (coverage[b] <= 0.0) {
      scores[b] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double acc = selector_bias;
    for (std::size_t ch = 0; ch < c; ++ch) acc += selector_weight[ch] * means[b * c + ch];
    scores[b] = acc;
  }
  return scores;
}

SelectionMask topk_select(const std::vector<double>& scores, const BlockGrid& grid, double k) {
  if (!(k > 0.0 && k <= 1.0)) {
    throw std::invalid_argument("topk_select: k must lie in (0, 1], got " + std::to_string(k));
  }
  if (scores.size() != grid.count()) {
    throw std::invalid_argument("topk_select: " + std::to_string(scores.size()) +
                                " scores for " + std::to_string(grid.count()) + " blocks");
  }
  std::vector<std::size_t> eligible;
  for (std::size_t b = 0; b < scores.size(); ++b) {
    if (scores[b] != -std::numeric_limits<double>::infinity()) eligible.push_back(b);
  }
  if (eligible.empty()) throw std::invalid_argument("topk_select: no eligible blocks");
  // The epsilon keeps exact products such as 0.3 * 10 from rounding up.
  const auto keep = static_cast<std::size_t>(
      std::ceil(k * static_cast<double>(eligible.size()) - 1e-9));
  std::stable_sort(eligible.begin(), eligible.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  SelectionMask m;
  m.block_mask.assign(grid.count(), 0);
  for (std::size_t i = 0; i < keep; ++i) m.block_mask[eligible[i]] = 1;
  m.retained_count = keep;
  m.pixel_mask = Tensor({grid.height, grid.width});
  for (std::size_t y = 0; y < grid.height; ++y)
    for (std::size_t x = 0; x < grid.width; ++x)
      m.pixel_mask.at(y, x) = m.block_mask[grid.block_of(y, x)];
  return m;
}

Tensor propagate_mask(const Tensor& mask_initial, const SelectionMask& selection) {
  if (mask_initial.shape() != selection.pixel_mask.shape()) {
    throw std::invalid_argument("propagate_mask: mask " + shape_str(mask_initial.shape()) +
                                " vs selection " + shape_str(selection.pixel_mask.shape()));
  }
  Tensor out = mask_initial;
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out[i] = std::clamp(out[i] - (1.0 - selection.pixel_mask[i]), 0.0, 1.0);
  }
  return out;
}

Var mlla_enhance(const Var& tokens, const MllaWeights& w) {
  const Shape& s = tokens.shape();
  if (s.size() != 2 || s[0] == 0) {
    throw std::invalid_argument("mlla_enhance: expected non-empty T x C tokens, got " +
                                shape_str(s));
  }
  Var q = elu_plus_one(linear(tokens, w.q_weight, w.q_bias));
  Var k = elu_plus_one(linear(tokens, w.k_weight, w.k_bias));
  Var v = linear(tokens, w.v_weight, w.v_bias);
  Var kv = matmul(transpose(k), v);                             // C x C
  Var ksum = reshape(sum_axis(k, 0), {s[1], 1});                // C x 1
  Var num = matmul(q, kv);                                       // T x C
  Var den = expand(matmul(q, ksum), {s[0], w.v_weight.shape()[1]});
  Var attn = div(num, den);
  Var gate = silu(linear(tokens, w.gate_weight, w.gate_bias));
  return add(tokens, mul(gate, attn));
}

Var ib_recover(const Var& tokens, const IbWeights& w) {
  const Shape& s = tokens.shape();
  if (s.size() != 2) {
    throw std::invalid_argument("ib_recover: expected T x C tokens, got " + shape_str(s));
  }
  if (s[0] == 0) return tokens;
  Var hidden = silu(linear(tokens, w.expand_weight, w.expand_bias));
  return add(tokens, linear(hidden, w.project_weight, w.project_bias));
}

AdpSel::AdpSel(ParameterSet& params, AdpSelConfig config, std::uint64_t seed) : config_(config) {
  const std::size_t c = config_.channels;
  if (c == 0) throw std::invalid_argument("AdpSel: channels must be positive");
  if (config_.scales.empty()) throw std::invalid_argument("AdpSel: at least one scale required");
  for (std::size_t i = 0; i < config_.scales.size(); ++i) {
    const std::size_t s = config_.scales[i];
    if (s == 0 || (s & (s - 1)) != 0) {
      throw std::invalid_argument("AdpSel: scale " + std::to_string(s) + " is not a power of two");
    }
    if (i > 0 && s <= config_.scales[i - 1]) {
      throw std::invalid_argument("AdpSel: scales must increase fine to coarse");
    }
  }
  if (!(config_.k > 0.0 && config_.k <= 1.0)) {
    throw std::invalid_argument("AdpSel: k must lie in (0, 1], got " + std::to_string(config_.k));
  }
  auto rng = init::module_rng(seed, "adpsel");
  const std::size_t e = config_.ib_expansion * c;
  const std::size_t hid = std::max<std::size_t>(1, c / config_.split_reduction);
  auto uniform = [&](Shape shape, std::size_t fan_in, double gain = 1.0) {
    return init::scaled_uniform(std::move(shape), fan_in, rng, gain);
  };

  for (std::size_t i = 0; i < config_.scales.size(); ++i) {
    const std::string p = "adpsel.s" + std::to_string(config_.scales[i]) + ".";
    ScaleParams sp;
    sp.selector_weight = params.add(p + "selector.weight", uniform({c}, c));
    sp.selector_bias = params.add(p + "selector.bias", Tensor({1}));
    sp.mlla.q_weight = params.add(p + "mlla.q.weight", uniform({c, c}, c));
    sp.mlla.q_bias = params.add(p + "mlla.q.bias", Tensor({c}));
    sp.mlla.k_weight = params.add(p + "mlla.k.weight", uniform({c, c}, c));
    sp.mlla.k_bias = params.add(p + "mlla.k.bias", Tensor({c}));
    sp.mlla.v_weight = params.add(p + "mlla.v.weight", uniform({c, c}, c));
    sp.mlla.v_bias = params.add(p + "mlla.v.bias", Tensor({c}));
    sp.mlla.gate_weight = params.add(p + "mlla.gate.weight", uniform({c, c}, c, 0.1));
    sp.mlla.gate_bias = params.add(p + "mlla.gate.bias", Tensor({c}));
    sp.ib.expand_weight = params.add(p + "ib.expand.weight", uniform({c, e}, c));
    sp.ib.expand_bias = params.add(p + "ib.expand.bias", Tensor({e}));
    sp.ib.project_weight = params.add(p + "ib.project.weight", uniform({e, c}, e, 0.1));
    sp.ib.project_bias = params.add(p + "ib.project.bias", Tensor({c}));
    // Starts as enhanced + recovered, i.e. the scattered maps recombined.
    Tensor agg = init::identity_kernel(c, 2 * c, 3, 0);
    agg += init::identity_kernel(c, 2 * c, 3, c);
    agg += uniform({c, 2 * c, 3, 3}, 2 * c * 9, 0.05);
    sp.aggregator_weight = params.add(p + "aggregator.weight", agg);
    sp.aggregator_bias = params.add(p + "aggregator.bias", Tensor({c}));
    scale_params.push_back(std::move(sp));
  }
  split_fc1_weight = params.add("adpsel.split.fc1.weight", uniform({c, hid}, c));
  split_fc1_bias = params.add("adpsel.split.fc1.bias", Tensor({hid}));
  split_fc2_weight = params.add("adpsel.split.fc2.weight", uniform({hid, c}, hid));
  split_fc2_bias = params.add("adpsel.split.fc2.bias", Tensor({c}));
}

void AdpSel::check_grid(std::size_t height, std::size_t width) const {
  for (std::size_t s : config_.scales) BlockGrid(height, width, s);
}

Var AdpSel::process_scale(const Var& feature, std::size_t scale_index,
                          const SelectionMask& selection) const {
  const Shape& s = feature.shape();
  const std::size_t c = s[0];
  const BlockGrid grid(s[1], s[2], config_.scales.at(scale_index));
  if (selection.block_mask.size() != grid.count()) {
    throw std::invalid_argument("process_scale: selection does not match block grid");
  }
  const ScaleParams& sp = scale_params[scale_index];
  auto branch = [&](std::uint8_t want, auto&& fn) -> Var {
    const std::vector<std::size_t> idx = token_index(selection, grid, c, want);
    if (idx.empty()) return Var(Tensor(s));
    Var tokens = gather(feature, idx, {idx.size() / c, c});
    return scatter(fn(tokens), idx, s);
  };
  Var enhanced = branch(1, [&](const Var& t) { return mlla_enhance(t, sp.mlla); });
  Var recovered = branch(0, [&](const Var& t) { return ib_recover(t, sp.ib); });
  return conv2d(concat({enhanced, recovered}, 0), sp.aggregator_weight, sp.aggregator_bias,
                {1, 1, 1});
}

Var AdpSel::split_attention(const std::vector<Var>& outputs, Var* weights_out) const {
  if (outputs.empty()) throw std::invalid_argument("split_attention: no scale outputs");
  const Shape& s = outputs.front().shape();
  const std::size_t c = s[0];
  std::vector<Var> pooled;
  for (const Var& y : outputs) {
    if (y.shape() != s) {
      throw std::invalid_argument("split_attention: output " + shape_str(y.shape()) + " vs " +
                                  shape_str(s));
    }
    pooled.push_back(reshape(global_pool(reshape(y, {c, s[1] * s[2]}), 1, PoolMode::kAvg), {1, c}));
  }
  Var hidden = relu(linear(concat(pooled, 0), split_fc1_weight, split_fc1_bias));
  Var weights = softmax(linear(hidden, split_fc2_weight, split_fc2_bias), 0);  // S x C
  if (weights_out) *weights_out = weights;
  Var out;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    Var wi = expand(reshape(slice(weights, 0, i, i + 1), {c, 1, 1}), s);
    Var term = mul(wi, outputs[i]);
    out = i == 0 ? term : add(out, term);
  }
  return out;
}

Var AdpSel::forward(const Var& feature, AdpSelTrace* trace) const {
  const Shape& s = feature.shape();
  if (s.size() != 3 || s[0] != config_.channels) {
    throw std::invalid_argument("adpsel_forward: expected " + std::to_string(config_.channels) +
                                " x H x W feature, got " + shape_str(s));
  }
  check_grid(s[1], s[2]);
  Tensor eligibility({s[1], s[2]}, 1.0);
  std::vector<Var> outputs;
  for (std::size_t i = 0; i < config_.scales.size(); ++i) {
    const BlockGrid grid(s[1], s[2], config_.scales[i]);
    const ScaleParams& sp = scale_params[i];
    std::vector<double> scores = score_blocks(feature.value(), grid, eligibility,
                                              sp.selector_weight.value(),
                                              sp.selector_bias.value()[0]);
    const bool any = std::any_of(scores.begin(), scores.end(), [](double v) { return std::isfinite(v); });
    if (trace) {
      trace->eligibility.push_back(eligibility);
      trace->scores.push_back(scores);
    }
    if (!any) {
      // Nothing left to select at this scale: pass the feature through.
      outputs.push_back(feature);
      if (trace) trace->selections.push_back({});
      continue;
    }
    SelectionMask sel = topk_select(scores, grid, config_.k);
    outputs.push_back(process_scale(feature, i, sel));
    eligibility = propagate_mask(eligibility, sel);
    if (trace) trace->selections.push_back(std::move(sel));
  }
  Var weights;
  Var out = split_attention(outputs, &weights);
  if (trace) {
    trace->scale_outputs = outputs;
    trace->split_weights = weights;
  }
  return out;
}

}  // namespace catnet::adpsel
