#include <cmath>

#include "catnet/numerics/ops.hpp"
#include "ops_internal.hpp"

namespace catnet {

using detail::parent_grad;
using detail::require;

namespace {

struct Corners {
  long y0, x0;
  double fy, fx;
  bool inside;  // false when no corner can touch the grid
};

Corners locate(double r, double q, std::size_t h, std::size_t w) {
  Corners c{};
  if (!(r > -1.0 && q > -1.0 && r < static_cast<double>(h) && q < static_cast<double>(w))) {
    c.inside = false;
    return c;
  }
  const double fr = std::floor(r);
  const double fq = std::floor(q);
  c.y0 = static_cast<long>(fr);
  c.x0 = static_cast<long>(fq);
  c.fy = r - fr;
  c.fx = q - fq;
  c.inside = true;
  return c;
}

}  // namespace

Var bilinear_sample(const Var& input, const Var& coords) {
  const Shape& is = input.shape();
  const Shape& cs = coords.shape();
  require(is.size() == 3, [&] { return "bilinear_sample: input must be C x H x W, got " + shape_str(is); });
  require(cs.size() == 3 && cs[0] == 2, [&] { return
          "bilinear_sample: coords must be 2 x H x W, got " + shape_str(cs); });
  const std::size_t ch = is[0], h = is[1], w = is[2];
  const std::size_t plane = cs[1] * cs[2];
  const double* x = input.value().data().data();
  const double* crd = coords.value().data().data();
  Tensor out({ch, cs[1], cs[2]});
  double* y = out.data().data();

  auto value_at = [&](const double* base, long yy, long xx) {
    if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) return 0.0;
    return base[yy * static_cast<long>(w) + xx];
  };

  for (std::size_t i = 0; i < plane; ++i) {
    const Corners c = locate(crd[i], crd[plane + i], h, w);
    if (!c.inside) continue;
    const double w00 = (1 - c.fy) * (1 - c.fx), w01 = (1 - c.fy) * c.fx;
    const double w10 = c.fy * (1 - c.fx), w11 = c.fy * c.fx;
    for (std::size_t k = 0; k < ch; ++k) {
      const double* base = x + k * h * w;
      y[k * plane + i] = w00 * value_at(base, c.y0, c.x0) + w01 * value_at(base, c.y0, c.x0 + 1) +
                         w10 * value_at(base, c.y0 + 1, c.x0) +
                         w11 * value_at(base, c.y0 + 1, c.x0 + 1);
    }
  }

  return make_result(std::move(out), {input, coords}, [ch, h, w, plane](const Node& node) {
    const double* x = node.parents[0]->value.data().data();
    const double* crd = node.parents[1]->value.data().data();
    const double* gy = node.grad.data().data();
    double* gx = parent_grad(node, 0);
    double* gc = parent_grad(node, 1);
    auto in_bounds = [&](long yy, long xx) {
      return yy >= 0 && xx >= 0 && yy < static_cast<long>(h) && xx < static_cast<long>(w);
    };
    for (std::size_t i = 0; i < plane; ++i) {
      const Corners c = locate(crd[i], crd[plane + i], h, w);
      if (!c.inside) continue;
      const long ys[2] = {c.y0, c.y0 + 1};
      const long xs[2] = {c.x0, c.x0 + 1};
      const double wy[2] = {1 - c.fy, c.fy};
      const double wx[2] = {1 - c.fx, c.fx};
      double d_row = 0.0, d_col = 0.0;
      for (std::size_t k = 0; k < ch; ++k) {
        const double g = gy[k * plane + i];
        if (g == 0.0) continue;
        double v[2][2];
        for (int a = 0; a < 2; ++a) {
          for (int b = 0; b < 2; ++b) {
            const bool ok = in_bounds(ys[a], xs[b]);
            const long idx = static_cast<long>(k * h * w) + ys[a] * static_cast<long>(w) + xs[b];
            v[a][b] = ok ? x[idx] : 0.0;
            if (gx && ok) gx[idx] += g * wy[a] * wx[b];
          }
        }
        d_row += g * ((v[1][0] - v[0][0]) * wx[0] + (v[1][1] - v[0][1]) * wx[1]);
        d_col += g * ((v[0][1] - v[0][0]) * wy[0] + (v[1][1] - v[1][0]) * wy[1]);
      }
      if (gc) {
        gc[i] += d_row;
        gc[plane + i] += d_col;
      }
    }
  });
}

}  // namespace catnet
