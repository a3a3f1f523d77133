#pragma once

#include <vector>

#include "catnet/numerics/autograd.hpp"

namespace catnet {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam over a ParameterSet. Parameters that received no gradient in a step are
// left untouched, so disabled sub-modules keep their initial values.
class Adam {
 public:
  Adam(ParameterSet& params, AdamOptions options);

  // Applies one update from the gradients currently stored on the parameters.
  // Returns the number of parameters that were updated.
  std::size_t step();
  std::size_t steps_taken() const { return t_; }

 private:
  ParameterSet& params_;
  AdamOptions opt_;
  std::vector<Tensor> m_, v_;
  std::vector<std::size_t> counts_;
  std::size_t t_ = 0;
};

}  // namespace catnet
