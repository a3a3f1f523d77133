#pragma once

#include <random>

#include "catnet/numerics/tensor.hpp"

namespace catnet::testing {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  return Tensor::uniform(std::move(shape), rng, lo, hi);
}

}  // namespace catnet::testing
