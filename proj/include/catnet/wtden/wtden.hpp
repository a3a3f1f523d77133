#pragma once

#include <array>
#include <cstdint>

#include "catnet/wtden/ssm.hpp"

namespace catnet::wtden {

struct WtDenConfig {
  std::size_t channels = 8;
  std::size_t state_dim = 16;
};

// Dual-branch wavelet denoiser: a global branch running selective recurrences
// over four subband scans and a local branch of nested wavelet convolutions.
class WtDen {
 public:
  WtDen(ParameterSet& params, WtDenConfig config, std::uint64_t seed);

  const WtDenConfig& config() const { return config_; }

  // Scan paths in fixed order: progressive +/-, interleaved +/-.
  static constexpr std::size_t kPaths = 4;
  static ScanSequence scan_path(const wavelet::SubbandSet& bands, std::size_t path);

  Var mamba_branch(const wavelet::SubbandSet& bands) const;
  Var conv_branch(const wavelet::SubbandSet& bands) const;
  // feature: C x H x W with H, W divisible by 4.
  Var forward(const Var& feature) const;

  std::array<SsmParams, kPaths> ssm;
  Var proj_weight, proj_bias;          // 4C x 4C x 1 x 1, 4C
  Var inner_weight, inner_bias;        // depthwise 16C x 1 x 3 x 3, 16C
  Var skip_weight, skip_bias;          // depthwise 4C x 1 x 3 x 3, 4C

 private:
  WtDenConfig config_;
};

// Depthwise 3x3 kernel that passes every channel through unchanged.
Tensor depthwise_identity(std::size_t channels);

}  // namespace catnet::wtden
