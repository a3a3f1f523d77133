#pragma once

#include <functional>
#include <string>
#include <vector>

#include "catnet/numerics/ops.hpp"
#include "test_util.hpp"

namespace catnet::testing {

// One scalar function per differentiable op. Inputs are kept away from kinks
// (integer sample positions, relu at 0) by the callers' input ranges.
struct OpCase {
  const char* name;
  Shape shape;
  std::function<Var(const Var&, std::uint64_t)> fn;
};

inline std::vector<OpCase> numerics_op_cases() {
  auto weighted = [](const Var& v, std::uint64_t seed) {
    return sum(mul(v, Var(random_tensor(v.shape(), seed + 777))));
  };
  return {
      {"add", {3, 4}, [=](const Var& v, auto s) { return weighted(add(v, square(v)), s); }},
      {"sub", {3, 4}, [=](const Var& v, auto s) { return weighted(sub(square(v), v), s); }},
      {"mul", {3, 4}, [=](const Var& v, auto s) { return weighted(mul(v, v), s); }},
      {"div", {3, 4},
       [=](const Var& v, auto s) { return weighted(div(v, add_scalar(square(v), 1.0)), s); }},
      {"scale", {5}, [=](const Var& v, auto s) { return weighted(scale(add_scalar(v, 2), -3), s); }},
      {"exp", {5}, [=](const Var& v, auto s) { return weighted(exp(v), s); }},
      {"sigmoid", {5}, [=](const Var& v, auto s) { return weighted(sigmoid(v), s); }},
      {"softplus", {5}, [=](const Var& v, auto s) { return weighted(softplus(v), s); }},
      {"silu", {5}, [=](const Var& v, auto s) { return weighted(silu(v), s); }},
      {"relu", {5}, [=](const Var& v, auto s) { return weighted(relu(v), s); }},
      {"elu_plus_one", {5}, [=](const Var& v, auto s) { return weighted(elu_plus_one(v), s); }},
      {"reshape", {2, 6}, [=](const Var& v, auto s) { return weighted(reshape(v, {3, 4}), s); }},
      {"permute", {2, 3, 4},
       [=](const Var& v, auto s) { return weighted(permute(v, {2, 0, 1}), s); }},
      {"concat", {2, 3},
       [=](const Var& v, auto s) { return weighted(concat({v, square(v)}, 1), s); }},
      {"slice", {4, 3}, [=](const Var& v, auto s) { return weighted(slice(v, 0, 1, 3), s); }},
      {"expand", {3, 1},
       [=](const Var& v, auto s) { return weighted(expand(v, {3, 4}), s); }},
      {"scatter", {4},
       [=](const Var& v, auto s) {
         std::vector<std::size_t> idx{5, 0, 2, 7};
         return weighted(scatter(v, idx, {8}), s);
       }},
      {"gather", {6},
       [=](const Var& v, auto s) {
         std::vector<std::size_t> idx{5, 0, 2, 2, 4};
         return weighted(gather(v, idx, {5}), s);
       }},
      {"square", {5}, [=](const Var& v, auto s) { return weighted(square(v), s); }},
      {"add_scalar", {5}, [=](const Var& v, auto s) { return weighted(add_scalar(v, 0.5), s); }},
      {"transpose", {2, 3}, [=](const Var& v, auto s) { return weighted(transpose(v), s); }},
      {"sum", {2, 3}, [=](const Var& v, auto) { return sum(square(v)); }},
      {"mean", {3, 3}, [=](const Var& v, auto) { return mean(square(v)); }},
      {"sum_axis", {3, 4}, [=](const Var& v, auto s) { return weighted(sum_axis(v, 1), s); }},
      {"global_pool_max", {4, 2, 3},
       [=](const Var& v, auto s) { return weighted(global_pool(v, 0, PoolMode::kMax), s); }},
      {"global_pool_avg", {4, 2, 3},
       [=](const Var& v, auto s) { return weighted(global_pool(v, 2, PoolMode::kAvg), s); }},
      {"softmax", {3, 4}, [=](const Var& v, auto s) { return weighted(softmax(v, 1), s); }},
      {"matmul", {3, 4},
       [=](const Var& v, auto s) { return weighted(matmul(v, transpose(v)), s); }},
      {"linear", {4, 3},
       [=](const Var& v, auto s) {
         return weighted(linear(v, Var(random_tensor({3, 2}, s + 1)), Var(random_tensor({2}, s + 2))),
                         s);
       }},
      {"conv2d", {2, 5, 5},
       [=](const Var& v, auto s) {
         return weighted(conv2d(v, Var(random_tensor({3, 2, 3, 3}, s + 3)),
                                Var(random_tensor({3}, s + 4)), {2, 1, 1}),
                         s);
       }},
      {"conv2d_kernel", {2, 2, 3, 3},
       [=](const Var& v, auto s) {
         return weighted(conv2d(Var(random_tensor({2, 5, 5}, s + 3)), v, {}, {1, 1, 1}), s);
       }},
      {"bilinear_sample_input", {2, 4, 4},
       [=](const Var& v, auto s) {
         Tensor c = identity_coords(4, 4);
         c += random_tensor({2, 4, 4}, s + 5, -1.4, 1.4);
         return weighted(bilinear_sample(v, Var(c)), s);
       }},
      {"bilinear_sample_coords", {2, 4, 4},
       [=](const Var& v, auto s) {
         Tensor c = identity_coords(4, 4);
         return weighted(bilinear_sample(Var(random_tensor({3, 4, 4}, s + 6)),
                                         add(Var(c), scale(v, 0.3))),
                         s);
       }},
      {"bce_with_logits", {6},
       [=](const Var& v, auto s) { return bce_with_logits(v, random_tensor({6}, s, 0.0, 1.0)); }},
      {"mse", {6}, [=](const Var& v, auto s) { return mse(v, random_tensor({6}, s)); }},
  };
}

// Nudges relu inputs off the kink at zero.
inline Tensor op_case_input(const OpCase& c, std::uint64_t seed) {
  Tensor x = random_tensor(c.shape, 1000 + seed, -1.5, 1.5);
  if (std::string(c.name) == "relu") {
    for (auto& v : x.data()) v = (v >= 0 ? 0.05 : -0.05) + v;
  }
  return x;
}

}  // namespace catnet::testing
