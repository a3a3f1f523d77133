#pragma once

#include <stdexcept>
#include <string>
#include <type_traits>

#include "catnet/numerics/autograd.hpp"

namespace catnet::detail {

// Gradient buffer of parent `i`, or nullptr when that parent is a constant.
inline double* parent_grad(const Node& out, std::size_t i) {
  const auto& p = out.parents[i];
  if (!p || !p->requires_grad) return nullptr;
  return p->grad_buffer().data().data();
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

// Builds the message only on failure; shape formatting is hot otherwise.
template <class MakeMessage>
  requires std::is_invocable_v<MakeMessage>
inline void require(bool ok, MakeMessage&& what) {
  if (!ok) throw std::invalid_argument(std::string(what()));
}

inline void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  }
}

}  // namespace catnet::detail
