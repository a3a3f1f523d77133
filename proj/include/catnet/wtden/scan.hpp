#pragma once

#include <vector>

#include "catnet/wavelet/haar.hpp"

namespace catnet::wtden {

enum class ScanDirection { kForward, kReverse };

// Subband tokens flattened into a sequence. A token is one spatial position of
// one band; its C channel values form a row of `values`.
struct ScanSequence {
  // order[t] = band * h * w + row * w + col, bands indexed LL=0, LH=1, HL=2, HH=3.
  std::vector<std::size_t> order;
  Var values;  // L x C
  Shape band_shape;  // C x h x w
};

// HH, HL, LH, LL, each band in raster order.
std::vector<std::size_t> progressive_order(std::size_t h, std::size_t w, ScanDirection dir);
// Positions in raster order, emitting LL, LH, HL, HH at each.
std::vector<std::size_t> interleaved_order(std::size_t h, std::size_t w, ScanDirection dir);

ScanSequence scan_with_order(const wavelet::SubbandSet& bands, std::vector<std::size_t> order);
ScanSequence progressive_scan(const wavelet::SubbandSet& bands, ScanDirection dir);
ScanSequence interleaved_scan(const wavelet::SubbandSet& bands, ScanDirection dir);

// Inverse of the scan, returned in the stacked 4C x h x w layout.
Var inverse_scan_stacked(const ScanSequence& seq);
wavelet::SubbandSet inverse_scan(const ScanSequence& seq);

}  // namespace catnet::wtden
