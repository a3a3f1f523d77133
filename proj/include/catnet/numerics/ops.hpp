#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "catnet/numerics/autograd.hpp"

// Differentiable operations over Var. Every op validates shapes and throws
// std::invalid_argument naming the offending shapes.
namespace catnet {

// Elementwise, identical shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

Var add_scalar(const Var& a, double s);
Var scale(const Var& a, double s);
Var square(const Var& a);
Var exp(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var silu(const Var& a);
Var relu(const Var& a);
// elu(x) + 1: strictly positive kernel feature map.
Var elu_plus_one(const Var& a);

// Shape manipulation.
Var reshape(const Var& a, Shape shape);
Var permute(const Var& a, const std::vector<std::size_t>& axes);
Var transpose(const Var& a);  // rank-2 only
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(const Var& a, std::size_t axis, std::size_t begin, std::size_t end);
// Broadcast size-1 axes of `a` to `shape` (same rank).
Var expand(const Var& a, const Shape& shape);
// out.flat[i] = a.flat[index[i]]; out has `shape`, numel(shape) == index.size().
Var gather(const Var& a, std::span<const std::size_t> index, Shape shape);
// out = zeros(shape); out.flat[index[i]] += a.flat[i].
Var scatter(const Var& a, std::span<const std::size_t> index, Shape shape);

// Reductions.
Var sum(const Var& a);
Var mean(const Var& a);
Var sum_axis(const Var& a, std::size_t axis);

enum class PoolMode { kMax, kAvg };
// Reduces `axis` away. Max routes the gradient to the first maximal element.
Var global_pool(const Var& a, std::size_t axis, PoolMode mode);

Var softmax(const Var& a, std::size_t axis);

// [m x k] @ [k x n].
Var matmul(const Var& a, const Var& b);
// tokens [T x C] @ weight [C x D] + bias [D] (bias optional).
Var linear(const Var& x, const Var& weight, const Var& bias = {});

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t groups = 1;
};

// input C_in x H x W, kernel C_out x (C_in/groups) x k x k, optional bias C_out.
Var conv2d(const Var& input, const Var& kernel, const Var& bias = {}, Conv2dOptions opt = {});

// input C x H x W, coords 2 x H' x W' holding fractional (row, col) positions.
// Reads outside [0, H-1] x [0, W-1] are zero.
Var bilinear_sample(const Var& input, const Var& coords);

// Row/col pixel grid, 2 x H x W.
Tensor identity_coords(std::size_t height, std::size_t width);

// Mean binary cross-entropy of sigmoid(logits) against targets in [0, 1].
Var bce_with_logits(const Var& logits, const Tensor& target);
// Mean squared error against a constant target.
Var mse(const Var& a, const Tensor& target);

}  // namespace catnet
