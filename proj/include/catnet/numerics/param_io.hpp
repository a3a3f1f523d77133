#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "catnet/numerics/autograd.hpp"

namespace catnet {

// Flat binary parameter file:
//   "CATP" | version u32 | count u32 |
//   per parameter: name_len u16 | name | rank u8 | dims u32... | payload f64...
// All integers and doubles little-endian.
inline constexpr std::uint32_t kParamFormatVersion = 1;

std::vector<std::uint8_t> encode_parameters(const ParameterSet& params);
ParameterSet decode_parameters(const std::vector<std::uint8_t>& bytes);

void save_parameters(const ParameterSet& params, const std::filesystem::path& path);
ParameterSet load_parameters(const std::filesystem::path& path);

// Copies values from `src` into `dst` by name; every name in `dst` must exist
// in `src` with the same shape.
void assign_parameters(ParameterSet& dst, const ParameterSet& src);

}  // namespace catnet
