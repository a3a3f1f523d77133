#pragma once

#include <functional>

#include "catnet/numerics/autograd.hpp"

namespace catnet {

using ScalarFn = std::function<Var(const Var&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares reverse-mode gradients of `scalar_fn` at `input` against central
// differences. Relative error uses max(|analytic|, |numeric|, 1e-8) as the
// denominator. Requires eps in [1e-6, 1e-3] and input values in [-2, 2].
GradCheckResult grad_check_detailed(const ScalarFn& scalar_fn, const Tensor& input, double eps);

double grad_check(const ScalarFn& scalar_fn, const Tensor& input, double eps);

}  // namespace catnet
