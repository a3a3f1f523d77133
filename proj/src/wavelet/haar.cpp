#include "catnet/wavelet/haar.hpp"

#include <stdexcept>

#include "catnet/numerics/ops.hpp"

namespace catnet::wavelet {

namespace {

// in: C x H x W -> out: 4C x H/2 x W/2
void analysis(const double* in, double* out, std::size_t c, std::size_t h, std::size_t w,
              bool accumulate) {
  const std::size_t hh = h / 2, hw = w / 2, band = c * hh * hw;
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t y = 0; y < hh; ++y) {
      const double* r0 = in + (k * h + 2 * y) * w;
      const double* r1 = r0 + w;
      for (std::size_t x = 0; x < hw; ++x) {
        const double a = r0[2 * x], b = r0[2 * x + 1], cc = r1[2 * x], d = r1[2 * x + 1];
        const std::size_t o = (k * hh + y) * hw + x;
        const double ll = 0.5 * (a + b + cc + d), lh = 0.5 * (a - b + cc - d);
        const double hl = 0.5 * (a + b - cc - d), hi = 0.5 * (a - b - cc + d);
        if (accumulate) {
          out[o] += ll;
          out[band + o] += lh;
          out[2 * band + o] += hl;
          out[3 * band + o] += hi;
        } else {
          out[o] = ll;
          out[band + o] = lh;
          out[2 * band + o] = hl;
          out[3 * band + o] = hi;
        }
      }
    }
  }
}

// in: 4C x H/2 x W/2 -> out: C x H x W
void synthesis(const double* in, double* out, std::size_t c, std::size_t h, std::size_t w,
               bool accumulate) {
  const std::size_t hh = h / 2, hw = w / 2, band = c * hh * hw;
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t y = 0; y < hh; ++y) {
      double* r0 = out + (k * h + 2 * y) * w;
      double* r1 = r0 + w;
      for (std::size_t x = 0; x < hw; ++x) {
        const std::size_t o = (k * hh + y) * hw + x;
        const double ll = in[o], lh = in[band + o], hl = in[2 * band + o], hi = in[3 * band + o];
        const double a = 0.5 * (ll + lh + hl + hi), b = 0.5 * (ll - lh + hl - hi);
        const double cc = 0.5 * (ll + lh - hl - hi), d = 0.5 * (ll - lh - hl + hi);
        if (accumulate) {
          r0[2 * x] += a;
          r0[2 * x + 1] += b;
          r1[2 * x] += cc;
          r1[2 * x + 1] += d;
        } else {
          r0[2 * x] = a;
          r0[2 * x + 1] = b;
          r1[2 * x] = cc;
          r1[2 * x + 1] = d;
        }
      }
    }
  }
}

}  // namespace

void validate(const SubbandSet& bands) {
  for (const Var* v : {&bands.ll, &bands.lh, &bands.hl, &bands.hh}) {
    if (!v->defined() || v->shape().size() != 3) {
      throw std::invalid_argument("subband set: every band must be a C x h x w tensor");
    }
    if (v->shape() != bands.ll.shape()) {
      throw std::invalid_argument("subband set: mismatched band shapes " +
                                  shape_str(bands.ll.shape()) + " vs " + shape_str(v->shape()));
    }
  }
}

Var haar_wt2d_stacked(const Var& input) {
  const Shape& s = input.shape();
  if (s.size() != 3) {
    throw std::invalid_argument("haar_wt2d: input must be C x H x W, got " + shape_str(s));
  }
  if (s[1] % 2 != 0 || s[2] % 2 != 0) {
    throw std::invalid_argument("haar_wt2d: spatial dimensions must be even, got H=" +
                                std::to_string(s[1]) + " W=" + std::to_string(s[2]));
  }
  const std::size_t c = s[0], h = s[1], w = s[2];
  Tensor out({4 * c, h / 2, w / 2});
  analysis(input.value().data().data(), out.data().data(), c, h, w, false);
  return make_result(std::move(out), {input}, [c, h, w](const Node& node) {
    if (!node.parents[0]->requires_grad) return;
    // The transform is orthonormal, so its adjoint is the synthesis.
    synthesis(node.grad.data().data(), node.parents[0]->grad_buffer().data().data(), c, h, w,
              true);
  });
}

Var haar_iwt2d_stacked(const Var& stacked) {
  const Shape& s = stacked.shape();
  if (s.size() != 3 || s[0] % 4 != 0) {
    throw std::invalid_argument("haar_iwt2d: expected 4C x h x w stacked subbands, got " +
                                shape_str(s));
  }
  const std::size_t c = s[0] / 4, h = 2 * s[1], w = 2 * s[2];
  Tensor out({c, h, w});
  synthesis(stacked.value().data().data(), out.data().data(), c, h, w, false);
  return make_result(std::move(out), {stacked}, [c, h, w](const Node& node) {
    if (!node.parents[0]->requires_grad) return;
    analysis(node.grad.data().data(), node.parents[0]->grad_buffer().data().data(), c, h, w,
             true);
  });
}

Var subband_concat(const SubbandSet& bands) {
  validate(bands);
  return concat({bands.ll, bands.lh, bands.hl, bands.hh}, 0);
}

SubbandSet subband_split(const Var& stacked) {
  const Shape& s = stacked.shape();
  if (s.size() != 3 || s[0] % 4 != 0 || s[0] == 0) {
    throw std::invalid_argument("subband_split: expected 4C x h x w, got " + shape_str(s));
  }
  const std::size_t c = s[0] / 4;
  return {slice(stacked, 0, 0, c), slice(stacked, 0, c, 2 * c), slice(stacked, 0, 2 * c, 3 * c),
          slice(stacked, 0, 3 * c, 4 * c)};
}

SubbandSet haar_wt2d(const Var& input) { return subband_split(haar_wt2d_stacked(input)); }

Var haar_iwt2d(const SubbandSet& bands) { return haar_iwt2d_stacked(subband_concat(bands)); }

}  // namespace catnet::wavelet
