#pragma once

#include "catnet/numerics/autograd.hpp"

namespace catnet::wavelet {

// Four half-resolution subbands of a single-level 2D Haar decomposition.
struct SubbandSet {
  Var ll, lh, hl, hh;

  const Shape& band_shape() const { return ll.shape(); }
};

// Throws unless all four bands are rank-3 and identically shaped.
void validate(const SubbandSet& bands);

// Orthonormal 2x2 Haar analysis per channel. For the block [[a, b], [c, d]]:
//   ll = (a+b+c+d)/2, lh = (a-b+c-d)/2, hl = (a+b-c-d)/2, hh = (a-b-c+d)/2.
SubbandSet haar_wt2d(const Var& input);
Var haar_iwt2d(const SubbandSet& bands);

// Channel-stacked layout [LL; LH; HL; HH], 4C x H/2 x W/2.
Var subband_concat(const SubbandSet& bands);
SubbandSet subband_split(const Var& stacked);

// Same transforms directly on the stacked layout; these are the primitive ops.
Var haar_wt2d_stacked(const Var& input);
Var haar_iwt2d_stacked(const Var& stacked);

}  // namespace catnet::wavelet
