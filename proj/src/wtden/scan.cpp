#include "catnet/wtden/scan.hpp"

#include <algorithm>
#include <stdexcept>

#include "catnet/numerics/ops.hpp"

namespace catnet::wtden {

namespace {

std::vector<std::size_t> finish(std::vector<std::size_t> order, ScanDirection dir) {
  if (dir == ScanDirection::kReverse) std::reverse(order.begin(), order.end());
  return order;
}

}  // namespace

std::vector<std::size_t> progressive_order(std::size_t h, std::size_t w, ScanDirection dir) {
  const std::size_t hw = h * w;
  std::vector<std::size_t> order;
  order.reserve(4 * hw);
  for (std::size_t band : {3, 2, 1, 0}) {
    for (std::size_t p = 0; p < hw; ++p) order.push_back(band * hw + p);
  }
  return finish(std::move(order), dir);
}

std::vector<std::size_t> interleaved_order(std::size_t h, std::size_t w, ScanDirection dir) {
  const std::size_t hw = h * w;
  std::vector<std::size_t> order;
  order.reserve(4 * hw);
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t band = 0; band < 4; ++band) order.push_back(band * hw + p);
  }
  return finish(std::move(order), dir);
}

ScanSequence scan_with_order(const wavelet::SubbandSet& bands, std::vector<std::size_t> order) {
  wavelet::validate(bands);
  const Shape bs = bands.band_shape();
  const std::size_t c = bs[0], hw = bs[1] * bs[2];
  if (order.size() != 4 * hw) {
    throw std::invalid_argument("scan: order has " + std::to_string(order.size()) +
                                " tokens, bands " + shape_str(bs) + " need " +
                                std::to_string(4 * hw));
  }
  std::vector<std::size_t> index(order.size() * c);
  for (std::size_t t = 0; t < order.size(); ++t) {
    const std::size_t band = order[t] / hw, pos = order[t] % hw;
    for (std::size_t k = 0; k < c; ++k) index[t * c + k] = (band * c + k) * hw + pos;
  }
  Var values = gather(wavelet::subband_concat(bands), index, {order.size(), c});
  return {std::move(order), values, bs};
}

ScanSequence progressive_scan(const wavelet::SubbandSet& bands, ScanDirection dir) {
  const Shape& bs = bands.band_shape();
  wavelet::validate(bands);
  return scan_with_order(bands, progressive_order(bs[1], bs[2], dir));
}

ScanSequence interleaved_scan(const wavelet::SubbandSet& bands, ScanDirection dir) {
  const Shape& bs = bands.band_shape();
  wavelet::validate(bands);
  return scan_with_order(bands, interleaved_order(bs[1], bs[2], dir));
}

Var inverse_scan_stacked(const ScanSequence& seq) {
  const std::size_t c = seq.band_shape[0], hw = seq.band_shape[1] * seq.band_shape[2];
  const std::size_t n = seq.order.size();
  if (n != 4 * hw || seq.values.shape() != Shape{n, c}) {
    throw std::invalid_argument("inverse_scan: values " + shape_str(seq.values.shape()) +
                                " inconsistent with bands " + shape_str(seq.band_shape));
  }
  std::vector<std::size_t> token_of(n, n);
  for (std::size_t t = 0; t < n; ++t) {
    if (seq.order[t] >= n || token_of[seq.order[t]] != n) {
      throw std::invalid_argument("inverse_scan: order is not a permutation");
    }
    token_of[seq.order[t]] = t;
  }
  std::vector<std::size_t> index(n * c);
  for (std::size_t band = 0; band < 4; ++band)
    for (std::size_t k = 0; k < c; ++k)
      for (std::size_t p = 0; p < hw; ++p)
        index[(band * c + k) * hw + p] = token_of[band * hw + p] * c + k;
  return gather(seq.values, index, {4 * c, seq.band_shape[1], seq.band_shape[2]});
}

wavelet::SubbandSet inverse_scan(const ScanSequence& seq) {
  return wavelet::subband_split(inverse_scan_stacked(seq));
}

}  // namespace catnet::wtden
