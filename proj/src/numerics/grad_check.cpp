#include "catnet/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace catnet {

namespace {

double evaluate(const ScalarFn& fn, const Tensor& x) {
  NoGradGuard guard;
  Var out = fn(Var(x));
  if (out.numel() != 1) {
    throw std::invalid_argument("grad_check: scalar_fn returned shape " + shape_str(out.shape()));
  }
  return out.value()[0];
}

}  // namespace

GradCheckResult grad_check_detailed(const ScalarFn& scalar_fn, const Tensor& input, double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) {
    throw std::invalid_argument("grad_check: eps must lie in [1e-6, 1e-3]");
  }
  for (double v : input.data()) {
    if (!(v >= -2.0 && v <= 2.0)) {
      throw std::invalid_argument("grad_check: input values must lie in [-2, 2]");
    }
  }

  Var x(input, true);
  Var out = scalar_fn(x);
  if (out.numel() != 1) {
    throw std::invalid_argument("grad_check: scalar_fn returned shape " + shape_str(out.shape()));
  }
  backward(out);
  const Tensor analytic = x.grad();

  GradCheckResult result;
  Tensor probe = input;
  for (std::size_t i = 0; i < input.numel(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = evaluate(scalar_fn, probe);
    probe[i] = orig - eps;
    const double down = evaluate(scalar_fn, probe);
    probe[i] = orig;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double err = std::abs(a - numeric) / denom;
    if (i == 0 || err > result.max_relative_error) result = {err, i, a, numeric};
  }
  return result;
}

double grad_check(const ScalarFn& scalar_fn, const Tensor& input, double eps) {
  return grad_check_detailed(scalar_fn, input, eps).max_relative_error;
}

}  // namespace catnet
