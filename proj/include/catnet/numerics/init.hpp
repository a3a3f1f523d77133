#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "catnet/numerics/tensor.hpp"

namespace catnet::init {

// Independent stream per (seed, module name) so adding parameters to one
// module never shifts another module's initialization.
std::mt19937_64 module_rng(std::uint64_t seed, std::string_view module);

// Uniform(-b, b) with b = gain / sqrt(fan_in).
Tensor scaled_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng, double gain = 1.0);

// C_out x C_in x k x k kernel with 1 at the center tap of channel pair
// (o, offset + o) for o < C_out.
Tensor identity_kernel(std::size_t c_out, std::size_t c_in, std::size_t k, std::size_t offset = 0);

// Square identity matrix.
Tensor eye(std::size_t n);

}  // namespace catnet::init
