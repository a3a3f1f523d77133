#pragma once

#include <cstdint>
#include <vector>

#include "catnet/numerics/autograd.hpp"

namespace catnet::adpsel {

// Partition of an H x W plane into non-overlapping S x S windows, raster order.
struct BlockGrid {
  std::size_t height = 0, width = 0, scale = 0;

  BlockGrid(std::size_t h, std::size_t w, std::size_t s);
  std::size_t rows() const { return height / scale; }
  std::size_t cols() const { return width / scale; }
  std::size_t count() const { return rows() * cols(); }
  std::size_t block_of(std::size_t y, std::size_t x) const {
    return (y / scale) * cols() + x / scale;
  }
};

struct SelectionMask {
  std::vector<std::uint8_t> block_mask;  // per block, 1 = selected
  Tensor pixel_mask;                     // H x W, block mask replicated S x S
  std::size_t retained_count = 0;
};

// Mean channel vector of every block (count x C).
Tensor block_means(const Tensor& feature, const BlockGrid& grid);

// Linear selector on block means; blocks with no eligible pixel score -inf.
// eligibility: H x W in [0, 1]. selector_weight: C, selector_bias: scalar.
std::vector<double> score_blocks(const Tensor& feature, const BlockGrid& grid,
                                 const Tensor& eligibility, const Tensor& selector_weight,
                                 double selector_bias);

// Keeps the ceil(k * n_eligible) best eligible blocks; ties go to the lower
// block index. Throws when no block is eligible or k is outside (0, 1].
SelectionMask topk_select(const std::vector<double>& scores, const BlockGrid& grid, double k);

// clamp(mask_initial - expand(1 - selection), 0, 1).
Tensor propagate_mask(const Tensor& mask_initial, const SelectionMask& selection);

// Linear-attention enhancement of selected tokens (T x C).
struct MllaWeights {
  Var q_weight, q_bias, k_weight, k_bias, v_weight, v_bias, gate_weight, gate_bias;
};
Var mlla_enhance(const Var& tokens, const MllaWeights& w);

// Inverted bottleneck on unselected tokens (T x C); T may be 0.
struct IbWeights {
  Var expand_weight, expand_bias, project_weight, project_bias;
};
Var ib_recover(const Var& tokens, const IbWeights& w);

struct AdpSelConfig {
  std::size_t channels = 8;
  std::vector<std::size_t> scales = {4, 8};  // fine to coarse
  double k = 0.3;
  std::size_t ib_expansion = 4;
  std::size_t split_reduction = 2;
};

struct ScaleParams {
  Var selector_weight, selector_bias;  // C, 1
  MllaWeights mlla;
  IbWeights ib;
  Var aggregator_weight, aggregator_bias;  // C x 2C x 3 x 3, C
};

// Per-forward diagnostics.
struct AdpSelTrace {
  std::vector<Tensor> eligibility;  // mask entering each scale
  std::vector<SelectionMask> selections;
  std::vector<std::vector<double>> scores;
  std::vector<Var> scale_outputs;
  Var split_weights;  // S x C
};

class AdpSel {
 public:
  AdpSel(ParameterSet& params, AdpSelConfig config, std::uint64_t seed);

  const AdpSelConfig& config() const { return config_; }

  // Throws unless every scale divides H and W.
  void check_grid(std::size_t height, std::size_t width) const;

  // One scale: select, enhance, recover, scatter back, aggregate.
  Var process_scale(const Var& feature, std::size_t scale_index, const SelectionMask& selection) const;

  Var split_attention(const std::vector<Var>& outputs, Var* weights_out = nullptr) const;

  Var forward(const Var& feature, AdpSelTrace* trace = nullptr) const;

  std::vector<ScaleParams> scale_params;
  Var split_fc1_weight, split_fc1_bias, split_fc2_weight, split_fc2_bias;

 private:
  AdpSelConfig config_;
};

}  // namespace catnet::adpsel
