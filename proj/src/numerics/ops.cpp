#include "catnet/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ops_internal.hpp"

namespace catnet {

using detail::parent_grad;
using detail::require;
using detail::require_same_shape;

namespace {

// Elementwise unary op with derivative expressed through (x, y).
template <typename F, typename DF>
Var unary(const Var& a, F f, DF df) {
  const auto& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) y[i] = f(x[i]);
  return make_result(std::move(y), {a}, [df](const Node& out) {
    double* ga = parent_grad(out, 0);
    if (!ga) return;
    const auto& x = out.parents[0]->value;
    for (std::size_t i = 0; i < x.numel(); ++i) ga[i] += out.grad[i] * df(x[i], out.value[i]);
  });
}

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  return s;
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor y = a.value();
  y += b.value();
  return make_result(std::move(y), {a, b}, [](const Node& out) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (double* g = parent_grad(out, p)) {
        for (std::size_t i = 0; i < out.grad.numel(); ++i) g[i] += out.grad[i];
      }
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor y = a.value() - b.value();
  return make_result(std::move(y), {a, b}, [](const Node& out) {
    if (double* g = parent_grad(out, 0)) {
      for (std::size_t i = 0; i < out.grad.numel(); ++i) g[i] += out.grad[i];
    }
    if (double* g = parent_grad(out, 1)) {
      for (std::size_t i = 0; i < out.grad.numel(); ++i) g[i] -= out.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] * b.value()[i];
  return make_result(std::move(y), {a, b}, [](const Node& out) {
    const auto& av = out.parents[0]->value;
    const auto& bv = out.parents[1]->value;
    if (double* g = parent_grad(out, 0)) {
      for (std::size_t i = 0; i < out.grad.numel(); ++i) g[i] += out.grad[i] * bv[i];
    }
    if (double* g = parent_grad(out, 1)) {
      for (std::size_t i = 0; i < out.grad.numel(); ++i) g[i] += out.grad[i] * av[i];
    }
  });
}

Var div(const Var& a, const Var& b) {
  require_same_shape(a, b, "div");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] / b.value()[i];
  return make_result(std::move(y), {a, b}, [](const Node& out) {
    const auto& bv = out.parents[1]->value;
    if (double* g = parent_grad(out, 0)) {
      for (std::size_t i = 0; i < out.grad.numel(); ++i) g[i] += out.grad[i] / bv[i];
    }
    if (double* g = parent_grad(out, 1)) {
      for (std::size_t i = 0; i < out.grad.numel(); ++i) {
        g[i] -= out.grad[i] * out.value[i] / bv[i];
      }
    }
  });
}

Var add_scalar(const Var& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var scale(const Var& a, double s) {
  return unary(a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Var square(const Var& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var exp(const Var& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var sigmoid(const Var& a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var softplus(const Var& a) {
  return unary(
      a, [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var silu(const Var& a) {
  return unary(
      a, [](double x) { return x / (1.0 + std::exp(-x)); },
      [](double x, double) {
        double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 + x * (1.0 - s));
      });
}

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var elu_plus_one(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x + 1.0 : std::exp(x); },
      [](double x, double y) { return x > 0.0 ? 1.0 : y; });
}

Var reshape(const Var& a, Shape shape) {
  require(shape_numel(shape) == a.numel(), [&] { return
          "reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape); });
  Tensor y = a.value().reshaped(std::move(shape));
  return make_result(std::move(y), {a}, [](const Node& out) {
    if (double* g = parent_grad(out, 0)) {
      for (std::size_t i = 0; i < out.grad.numel(); ++i) g[i] += out.grad[i];
    }
  });
}

Var permute(const Var& a, const std::vector<std::size_t>& axes) {
  const Shape& in_shape = a.shape();
  const std::size_t rank = in_shape.size();
  require(axes.size() == rank, [&] { return "permute: axes length does not match rank of " +
                                   shape_str(in_shape); });
  std::vector<bool> used(rank, false);
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    require(axes[i] < rank && !used[axes[i]], "permute: invalid axis permutation");
    used[axes[i]] = true;
    out_shape[i] = in_shape[axes[i]];
  }
  auto in_strides = strides_of(in_shape);
  // Source flat index for every output flat index.
  auto index = std::make_shared<std::vector<std::size_t>>(a.numel());
  std::vector<std::size_t> counter(rank, 0);
  for (std::size_t flat = 0; flat < a.numel(); ++flat) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < rank; ++i) src += counter[i] * in_strides[axes[i]];
    (*index)[flat] = src;
    for (std::size_t i = rank; i-- > 0;) {
      if (++counter[i] < out_shape[i]) break;
      counter[i] = 0;
    }
  }
  return gather(a, *index, out_shape);
}

Var transpose(const Var& a) {
  require(a.shape().size() == 2, [&] { return "transpose: expected rank 2, got " + shape_str(a.shape()); });
  return permute(a, {1, 0});
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  require(!parts.empty(), "concat: no inputs");
  Shape shape = parts[0].shape();
  require(axis < shape.size(), [&] { return "concat: axis out of range for " + shape_str(shape); });
  std::size_t total = 0;
  for (auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == shape.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == shape[i];
    require(ok, [&] { return "concat: incompatible shapes " + shape_str(shape) + " and " + shape_str(s); });
    total += s[axis];
  }
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  shape[axis] = total;
  Tensor y(shape);
  std::vector<std::size_t> widths;
  std::size_t offset = 0;
  for (auto& p : parts) {
    std::size_t w = p.shape()[axis] * inner;
    widths.push_back(w);
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(p.value().data().begin() + o * w, w,
                  y.data().begin() + o * total * inner + offset);
    }
    offset += w;
  }
  return make_result(std::move(y), parts, [widths, outer, total, inner](const Node& out) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < widths.size(); ++p) {
      if (double* g = parent_grad(out, p)) {
        for (std::size_t o = 0; o < outer; ++o) {
          const double* src = out.grad.data().data() + o * total * inner + offset;
          double* dst = g + o * widths[p];
          for (std::size_t i = 0; i < widths[p]; ++i) dst[i] += src[i];
        }
      }
      offset += widths[p];
    }
  });
}

Var slice(const Var& a, std::size_t axis, std::size_t begin, std::size_t end) {
  Shape shape = a.shape();
  require(axis < shape.size() && begin < end && end <= shape[axis], [&] { return
          "slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
              ") invalid for axis " + std::to_string(axis) + " of " + shape_str(shape); });
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t full = shape[axis] * inner;
  const std::size_t w = (end - begin) * inner;
  shape[axis] = end - begin;
  Tensor y(shape);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(a.value().data().begin() + o * full + begin * inner, w,
                y.data().begin() + o * w);
  }
  return make_result(std::move(y), {a}, [outer, full, w, begin, inner](const Node& out) {
    double* g = parent_grad(out, 0);
    if (!g) return;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < w; ++i) g[o * full + begin * inner + i] += out.grad[o * w + i];
    }
  });
}

Var expand(const Var& a, const Shape& shape) {
  const Shape& in = a.shape();
  require(in.size() == shape.size(), [&] { return "expand: rank mismatch " + shape_str(in) + " -> " +
                                         shape_str(shape); });
  for (std::size_t i = 0; i < in.size(); ++i) {
    require(in[i] == shape[i] || in[i] == 1, [&] { return
            "expand: cannot broadcast " + shape_str(in) + " to " + shape_str(shape); });
  }
  auto in_strides = strides_of(in);
  std::vector<std::size_t> index(shape_numel(shape));
  std::vector<std::size_t> counter(shape.size(), 0);
  for (std::size_t flat = 0; flat < index.size(); ++flat) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (in[i] != 1) src += counter[i] * in_strides[i];
    }
    index[flat] = src;
    for (std::size_t i = shape.size(); i-- > 0;) {
      if (++counter[i] < shape[i]) break;
      counter[i] = 0;
    }
  }
  return gather(a, index, shape);
}

Var gather(const Var& a, std::span<const std::size_t> index, Shape shape) {
  require(shape_numel(shape) == index.size(), [&] { return
          "gather: index length does not match output shape " + shape_str(shape); });
  Tensor y(shape);
  const auto& x = a.value();
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] < x.numel(), [&] { return "gather: index out of range for " + shape_str(x.shape()); });
    y[i] = x[index[i]];
  }
  auto idx = std::make_shared<std::vector<std::size_t>>(index.begin(), index.end());
  return make_result(std::move(y), {a}, [idx](const Node& out) {
    double* g = parent_grad(out, 0);
    if (!g) return;
    for (std::size_t i = 0; i < idx->size(); ++i) g[(*idx)[i]] += out.grad[i];
  });
}

Var scatter(const Var& a, std::span<const std::size_t> index, Shape shape) {
  require(a.numel() == index.size(), [&] { return
          "scatter: index length does not match source " + shape_str(a.shape()); });
  Tensor y(shape);
  const auto& x = a.value();
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] < y.numel(), [&] { return "scatter: index out of range for " + shape_str(shape); });
    y[index[i]] += x[i];
  }
  auto idx = std::make_shared<std::vector<std::size_t>>(index.begin(), index.end());
  return make_result(std::move(y), {a}, [idx](const Node& out) {
    double* g = parent_grad(out, 0);
    if (!g) return;
    for (std::size_t i = 0; i < idx->size(); ++i) g[i] += out.grad[(*idx)[i]];
  });
}

Var sum(const Var& a) {
  double s = std::accumulate(a.value().data().begin(), a.value().data().end(), 0.0);
  return make_result(Tensor::scalar(s), {a}, [](const Node& out) {
    double* g = parent_grad(out, 0);
    if (!g) return;
    const double go = out.grad[0];
    const std::size_t n = out.parents[0]->value.numel();
    for (std::size_t i = 0; i < n; ++i) g[i] += go;
  });
}

Var mean(const Var& a) {
  require(a.numel() > 0, "mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Var sum_axis(const Var& a, std::size_t axis) {
  return scale(global_pool(a, axis, PoolMode::kAvg), static_cast<double>(a.shape().at(axis)));
}

Var global_pool(const Var& a, std::size_t axis, PoolMode mode) {
  const Shape& in = a.shape();
  require(axis < in.size(), [&] { return "global_pool: axis " + std::to_string(axis) + " out of range for " +
                                shape_str(in); });
  const std::size_t n = in[axis];
  require(n >= 1, [&] { return "global_pool: pooled axis is empty in " + shape_str(in); });
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= in[i];
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < in.size(); ++i) inner *= in[i];
  Shape out_shape;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (i != axis) out_shape.push_back(in[i]);
  }
  Tensor y(out_shape);
  const auto& x = a.value();
  if (mode == PoolMode::kAvg) {
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t j = 0; j < n; ++j) {
        const double* src = x.data().data() + (o * n + j) * inner;
        double* dst = y.data().data() + o * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
      }
      for (std::size_t i = 0; i < inner; ++i) y[o * inner + i] *= inv;
    }
    return make_result(std::move(y), {a}, [outer, n, inner, inv](const Node& out) {
      double* g = parent_grad(out, 0);
      if (!g) return;
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < n; ++j) {
          for (std::size_t i = 0; i < inner; ++i) {
            g[(o * n + j) * inner + i] += out.grad[o * inner + i] * inv;
          }
        }
      }
    });
  }
  auto arg = std::make_shared<std::vector<std::size_t>>(y.numel());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      std::size_t best = o * n * inner + i;
      for (std::size_t j = 1; j < n; ++j) {
        std::size_t k = (o * n + j) * inner + i;
        if (x[k] > x[best]) best = k;  // strict: ties keep the lowest index
      }
      (*arg)[o * inner + i] = best;
      y[o * inner + i] = x[best];
    }
  }
  return make_result(std::move(y), {a}, [arg](const Node& out) {
    double* g = parent_grad(out, 0);
    if (!g) return;
    for (std::size_t i = 0; i < arg->size(); ++i) g[(*arg)[i]] += out.grad[i];
  });
}

Var softmax(const Var& a, std::size_t axis) {
  const Shape& in = a.shape();
  require(axis < in.size() && in[axis] > 0, [&] { return "softmax: bad axis for " + shape_str(in); });
  const std::size_t n = in[axis];
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= in[i];
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < in.size(); ++i) inner *= in[i];
  const auto& x = a.value();
  Tensor y(in);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * n * inner + i;
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) m = std::max(m, x[base + j * inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double e = std::exp(x[base + j * inner] - m);
        y[base + j * inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < n; ++j) y[base + j * inner] /= z;
    }
  }
  return make_result(std::move(y), {a}, [outer, n, inner](const Node& out) {
    double* g = parent_grad(out, 0);
    if (!g) return;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t base = o * n * inner + i;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          dot += out.grad[base + j * inner] * out.value[base + j * inner];
        }
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t k = base + j * inner;
          g[k] += out.value[k] * (out.grad[k] - dot);
        }
      }
    }
  });
}

Var matmul(const Var& a, const Var& b) {
  require(a.shape().size() == 2 && b.shape().size() == 2 && a.dim(1) == b.dim(0), [&] { return
          "matmul: incompatible shapes " + shape_str(a.shape()) + " @ " + shape_str(b.shape()); });
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor y({m, n});
  const double* av = a.value().data().data();
  const double* bv = b.value().data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = y.data().data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = av[i * k + p];
      const double* brow = bv + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
    }
  }
  return make_result(std::move(y), {a, b}, [m, k, n](const Node& out) {
    const double* av = out.parents[0]->value.data().data();
    const double* bv = out.parents[1]->value.data().data();
    const double* go = out.grad.data().data();
    if (double* ga = parent_grad(out, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += go[i * n + j] * bv[p * n + j];
          ga[i * k + p] += s;
        }
      }
    }
    if (double* gb = parent_grad(out, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double s = av[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += s * go[i * n + j];
        }
      }
    }
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  Var y = matmul(x, weight);
  if (!bias.defined()) return y;
  require(bias.shape() == Shape{weight.dim(1)}, [&] { return
          "linear: bias " + shape_str(bias.shape()) + " does not match weight " +
              shape_str(weight.shape()); });
  return add(y, expand(reshape(bias, {1, weight.dim(1)}), y.shape()));
}

Tensor identity_coords(std::size_t height, std::size_t width) {
  Tensor c({2, height, width});
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      c.at(0, y, x) = static_cast<double>(y);
      c.at(1, y, x) = static_cast<double>(x);
    }
  }
  return c;
}

Var bce_with_logits(const Var& logits, const Tensor& target) {
  require(logits.numel() == target.numel() && logits.numel() > 0, [&] { return
          "bce_with_logits: shape mismatch " + shape_str(logits.shape()) + " vs " +
              shape_str(target.shape()); });
  const auto& z = logits.value();
  double total = 0.0;
  for (std::size_t i = 0; i < z.numel(); ++i) {
    // max(z,0) - z*t + log(1 + exp(-|z|))
    total += std::max(z[i], 0.0) - z[i] * target[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  const double inv = 1.0 / static_cast<double>(z.numel());
  auto t = std::make_shared<Tensor>(target);
  return make_result(Tensor::scalar(total * inv), {logits}, [t, inv](const Node& out) {
    double* g = parent_grad(out, 0);
    if (!g) return;
    const auto& z = out.parents[0]->value;
    const double go = out.grad[0] * inv;
    for (std::size_t i = 0; i < z.numel(); ++i) {
      g[i] += go * (1.0 / (1.0 + std::exp(-z[i])) - (*t)[i]);
    }
  });
}

Var mse(const Var& a, const Tensor& target) {
  require(a.numel() == target.numel() && a.numel() > 0, [&] { return
          "mse: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(target.shape()); });
  return mean(square(sub(a, Var(target.reshaped(a.shape())))));
}

}  // namespace catnet
