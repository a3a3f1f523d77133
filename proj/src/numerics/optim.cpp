#include "catnet/numerics/optim.hpp"

#include <cmath>

namespace catnet {

Adam::Adam(ParameterSet& params, AdamOptions options) : params_(params), opt_(options) {
  for (const auto& p : params_.items()) {
    m_.emplace_back(p.var.shape());
    v_.emplace_back(p.var.shape());
    counts_.push_back(0);
  }
}

std::size_t Adam::step() {
  ++t_;
  std::size_t updated = 0;
  auto& items = params_.items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    Var& var = items[i].var;
    if (!var.has_grad()) continue;
    const Tensor g = var.grad();
    // Bias correction counts per-parameter updates.
    const double n = static_cast<double>(++counts_[i]);
    const double c1 = 1.0 - std::pow(opt_.beta1, n);
    const double c2 = 1.0 - std::pow(opt_.beta2, n);
    Tensor& value = var.mutable_value();
    for (std::size_t k = 0; k < value.numel(); ++k) {
      m_[i][k] = opt_.beta1 * m_[i][k] + (1.0 - opt_.beta1) * g[k];
      v_[i][k] = opt_.beta2 * v_[i][k] + (1.0 - opt_.beta2) * g[k] * g[k];
      const double mhat = m_[i][k] / c1;
      const double vhat = v_[i][k] / c2;
      value[k] -= opt_.learning_rate * mhat / (std::sqrt(vhat) + opt_.epsilon);
    }
    ++updated;
  }
  return updated;
}

}  // namespace catnet
