#include "catnet/numerics/init.hpp"

#include <cmath>

namespace catnet::init {

std::mt19937_64 module_rng(std::uint64_t seed, std::string_view module) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : module) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

Tensor scaled_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng, double gain) {
  const double bound = gain / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
  return Tensor::uniform(std::move(shape), rng, -bound, bound);
}

Tensor identity_kernel(std::size_t c_out, std::size_t c_in, std::size_t k, std::size_t offset) {
  Tensor t({c_out, c_in, k, k});
  const std::size_t mid = k / 2;
  for (std::size_t o = 0; o < c_out && offset + o < c_in; ++o) {
    t[((o * c_in + offset + o) * k + mid) * k + mid] = 1.0;
  }
  return t;
}

Tensor eye(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

}  // namespace catnet::init
