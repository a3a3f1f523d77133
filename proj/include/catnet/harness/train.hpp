#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "catnet/harness/pipeline.hpp"

namespace catnet::harness {

// Non-finite loss; the CLI maps it to exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long step, double loss);
  long step() const { return step_; }

 private:
  long step_;
};

struct TrainResult {
  std::vector<double> loss_curve;  // one entry per optimizer step
};

// Adam on BCE(occupancy) + mse_weight * MSE(feature, clean). Each step draws
// `batch` fresh scenarios from the training stream and scores their last tick.
TrainResult train(CatNet& model, const PipelineConfig& cfg,
                  const std::function<void(long, double)>& on_step = {});

}  // namespace catnet::harness
