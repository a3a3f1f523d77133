#include "catnet/wtden/wtden.hpp"

#include <stdexcept>

#include "catnet/numerics/init.hpp"
#include "catnet/numerics/ops.hpp"

namespace catnet::wtden {

Tensor depthwise_identity(std::size_t channels) {
  Tensor k({channels, 1, 3, 3});
  for (std::size_t c = 0; c < channels; ++c) k[c * 9 + 4] = 1.0;
  return k;
}

WtDen::WtDen(ParameterSet& params, WtDenConfig config, std::uint64_t seed) : config_(config) {
  const std::size_t c = config_.channels;
  if (c == 0) throw std::invalid_argument("WtDen: channels must be positive");
  auto rng = init::module_rng(seed, "wtden");
  const char* names[kPaths] = {"prog_fwd", "prog_rev", "inter_fwd", "inter_rev"};
  for (std::size_t p = 0; p < kPaths; ++p) {
    ssm[p] = make_ssm_params(params, std::string("wtden.ssm.") + names[p], c, config_.state_dim, rng);
  }
  // Skip terms of the four paths sum to 4x the bands; the projection starts by
  // undoing that.
  Tensor proj = init::eye(4 * c) * 0.25;
  proj_weight = params.add("wtden.proj.weight", proj.reshaped({4 * c, 4 * c, 1, 1}));
  proj_bias = params.add("wtden.proj.bias", Tensor({4 * c}));
  inner_weight = params.add("wtden.conv.inner.weight",
                            init::scaled_uniform({16 * c, 1, 3, 3}, 9, rng, 0.1));
  inner_bias = params.add("wtden.conv.inner.bias", Tensor({16 * c}));
  skip_weight =
      params.add("wtden.conv.skip.weight", init::scaled_uniform({4 * c, 1, 3, 3}, 9, rng, 0.1));
  skip_bias = params.add("wtden.conv.skip.bias", Tensor({4 * c}));
}

ScanSequence WtDen::scan_path(const wavelet::SubbandSet& bands, std::size_t path) {
  switch (path) {
    case 0: return progressive_scan(bands, ScanDirection::kForward);
    case 1: return progressive_scan(bands, ScanDirection::kReverse);
    case 2: return interleaved_scan(bands, ScanDirection::kForward);
    case 3: return interleaved_scan(bands, ScanDirection::kReverse);
    default: throw std::out_of_range("scan path " + std::to_string(path));
  }
}

Var WtDen::mamba_branch(const wavelet::SubbandSet& bands) const {
  wavelet::validate(bands);
  if (bands.band_shape()[0] != config_.channels) {
    throw std::invalid_argument("wtden: bands " + shape_str(bands.band_shape()) + " but " +
                                std::to_string(config_.channels) + " channels configured");
  }
  Var total;
  for (std::size_t p = 0; p < kPaths; ++p) {
    Var restored = inverse_scan_stacked(selective_ssm(scan_path(bands, p), ssm[p]));
    total = p == 0 ? restored : add(total, restored);
  }
  Var enhanced = conv2d(total, proj_weight, proj_bias);
  return wavelet::haar_iwt2d_stacked(enhanced);
}

Var WtDen::conv_branch(const wavelet::SubbandSet& bands) const {
  wavelet::validate(bands);
  const Shape& bs = bands.band_shape();
  if (bs[0] != config_.channels) {
    throw std::invalid_argument("wtden: bands " + shape_str(bs) + " but " +
                                std::to_string(config_.channels) + " channels configured");
  }
  if (bs[1] % 2 != 0 || bs[2] % 2 != 0) {
    throw std::invalid_argument("wtden conv branch: band size " + shape_str(bs) +
                                " must be even for the inner transform");
  }
  const std::size_t c4 = 4 * bs[0];
  Var fwt = wavelet::subband_concat(bands);
  Var inner = conv2d(wavelet::haar_wt2d_stacked(fwt), inner_weight, inner_bias, {1, 1, 4 * c4});
  Var skip = conv2d(fwt, skip_weight, skip_bias, {1, 1, c4});
  return wavelet::haar_iwt2d_stacked(add(wavelet::haar_iwt2d_stacked(inner), skip));
}

Var WtDen::forward(const Var& feature) const {
  const Shape& s = feature.shape();
  if (s.size() != 3 || s[1] % 4 != 0 || s[2] % 4 != 0) {
    throw std::invalid_argument("wtden_forward: expected C x H x W with H, W divisible by 4, got " +
                                shape_str(s));
  }
  wavelet::SubbandSet bands = wavelet::haar_wt2d(feature);
  return add(mamba_branch(bands), conv_branch(bands));
}

}  // namespace catnet::wtden
