#include <algorithm>

#include "catnet/numerics/ops.hpp"
#include "ops_internal.hpp"

namespace catnet {

using detail::parent_grad;
using detail::require;

namespace {

struct ConvGeometry {
  std::size_t c_in, h, w;
  std::size_t c_out, k;
  std::size_t h_out, w_out;
  std::size_t stride, pad, groups;
  std::size_t cin_per_group, cout_per_group;
};

// Visits every (kernel tap, output row) pair with the contiguous range of
// output columns whose input column is in bounds. `fn` receives
// (o, ci, ky, kx, oy, iy, ox_begin, ox_end).
template <typename Fn>
void for_each_tap(const ConvGeometry& g, Fn&& fn) {
  const long pad = static_cast<long>(g.pad);
  const long stride = static_cast<long>(g.stride);
  for (std::size_t o = 0; o < g.c_out; ++o) {
    const std::size_t group = o / g.cout_per_group;
    for (std::size_t cl = 0; cl < g.cin_per_group; ++cl) {
      const std::size_t ci = group * g.cin_per_group + cl;
      for (std::size_t ky = 0; ky < g.k; ++ky) {
        for (std::size_t kx = 0; kx < g.k; ++kx) {
          const long off = static_cast<long>(kx) - pad;
          // ox*stride + off in [0, w)
          long ox_begin = off >= 0 ? 0 : (-off + stride - 1) / stride;
          long last = static_cast<long>(g.w) - 1 - off;
          if (last < 0) continue;
          long ox_end = std::min<long>(last / stride + 1, static_cast<long>(g.w_out));
          if (ox_begin >= ox_end) continue;
          for (std::size_t oy = 0; oy < g.h_out; ++oy) {
            const long iy = static_cast<long>(oy) * stride + static_cast<long>(ky) - pad;
            if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
            fn(o, cl, ci, ky, kx, oy, static_cast<std::size_t>(iy),
               static_cast<std::size_t>(ox_begin), static_cast<std::size_t>(ox_end), off);
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(const Var& input, const Var& kernel, const Var& bias, Conv2dOptions opt) {
  const Shape& is = input.shape();
  const Shape& ks = kernel.shape();
  require(is.size() == 3, [&] { return "conv2d: input must be C x H x W, got " + shape_str(is); });
  require(ks.size() == 4 && ks[2] == ks[3], [&] { return
          "conv2d: kernel must be C_out x C_in x k x k, got " + shape_str(ks); });
  require(opt.stride >= 1 && opt.groups >= 1, "conv2d: stride and groups must be positive");
  require(ks[2] % 2 == 1, [&] { return "conv2d: kernel size must be odd, got " + shape_str(ks); });
  require(is[0] % opt.groups == 0 && ks[0] % opt.groups == 0 && ks[1] * opt.groups == is[0], [&] { return
          "conv2d: input " + shape_str(is) + " channels do not match kernel " + shape_str(ks) +
              " with groups=" + std::to_string(opt.groups); });
  require(is[1] + 2 * opt.pad >= ks[2] && is[2] + 2 * opt.pad >= ks[2], [&] { return
          "conv2d: input " + shape_str(is) + " smaller than kernel " + shape_str(ks); });
  if (bias.defined()) {
    require(bias.shape() == Shape{ks[0]}, [&] { return
            "conv2d: bias " + shape_str(bias.shape()) + " does not match kernel " + shape_str(ks); });
  }

  ConvGeometry g{};
  g.c_in = is[0];
  g.h = is[1];
  g.w = is[2];
  g.c_out = ks[0];
  g.k = ks[2];
  g.stride = opt.stride;
  g.pad = opt.pad;
  g.groups = opt.groups;
  g.h_out = (g.h + 2 * g.pad - g.k) / g.stride + 1;
  g.w_out = (g.w + 2 * g.pad - g.k) / g.stride + 1;
  g.cin_per_group = ks[1];
  g.cout_per_group = g.c_out / g.groups;

  Tensor out({g.c_out, g.h_out, g.w_out});
  const double* x = input.value().data().data();
  const double* wt = kernel.value().data().data();
  double* y = out.data().data();
  if (bias.defined()) {
    for (std::size_t o = 0; o < g.c_out; ++o) {
      std::fill_n(y + o * g.h_out * g.w_out, g.h_out * g.w_out, bias.value()[o]);
    }
  }
  const std::size_t s = g.stride;
  for_each_tap(g, [&](std::size_t o, std::size_t cl, std::size_t ci, std::size_t ky, std::size_t kx,
                      std::size_t oy, std::size_t iy, std::size_t ob, std::size_t oe, long off) {
    const double wv = wt[((o * g.cin_per_group + cl) * g.k + ky) * g.k + kx];
    if (wv == 0.0) return;
    double* yr = y + (o * g.h_out + oy) * g.w_out;
    const double* xr = x + (ci * g.h + iy) * g.w;
    for (std::size_t ox = ob; ox < oe; ++ox) yr[ox] += wv * xr[static_cast<long>(ox * s) + off];
  });

  std::vector<Var> parents{input, kernel};
  if (bias.defined()) parents.push_back(bias);
  return make_result(std::move(out), std::move(parents), [g](const Node& node) {
    const double* x = node.parents[0]->value.data().data();
    const double* wt = node.parents[1]->value.data().data();
    const double* gy = node.grad.data().data();
    double* gx = parent_grad(node, 0);
    double* gw = parent_grad(node, 1);
    const std::size_t s = g.stride;
    if (gx || gw) {
      for_each_tap(g, [&](std::size_t o, std::size_t cl, std::size_t ci, std::size_t ky,
                          std::size_t kx, std::size_t oy, std::size_t iy, std::size_t ob,
                          std::size_t oe, long off) {
        const std::size_t widx = ((o * g.cin_per_group + cl) * g.k + ky) * g.k + kx;
        const double* gyr = gy + (o * g.h_out + oy) * g.w_out;
        const std::size_t xrow = (ci * g.h + iy) * g.w;
        if (gx) {
          const double wv = wt[widx];
          double* gxr = gx + xrow;
          for (std::size_t ox = ob; ox < oe; ++ox) gxr[static_cast<long>(ox * s) + off] += wv * gyr[ox];
        }
        if (gw) {
          const double* xr = x + xrow;
          double acc = 0.0;
          for (std::size_t ox = ob; ox < oe; ++ox) acc += gyr[ox] * xr[static_cast<long>(ox * s) + off];
          gw[widx] += acc;
        }
      });
    }
    if (node.parents.size() > 2) {
      if (double* gb = parent_grad(node, 2)) {
        const std::size_t plane = g.h_out * g.w_out;
        for (std::size_t o = 0; o < g.c_out; ++o) {
          double acc = 0.0;
          for (std::size_t i = 0; i < plane; ++i) acc += gy[o * plane + i];
          gb[o] += acc;
        }
      }
    }
  });
}

}  // namespace catnet
