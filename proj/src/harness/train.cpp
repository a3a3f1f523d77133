#include "catnet/harness/train.hpp"

#include <cmath>
#include <string>

#include "catnet/numerics/ops.hpp"
#include "catnet/numerics/optim.hpp"

namespace catnet::harness {

DivergenceError::DivergenceError(long step, double loss)
    : std::runtime_error("training diverged at step " + std::to_string(step) + " (loss " +
                         std::to_string(loss) + ")"),
      step_(step) {}

TrainResult train(CatNet& model, const PipelineConfig& cfg,
                  const std::function<void(long, double)>& on_step) {
  cfg.validate();
  AdamOptions opts;
  opts.learning_rate = cfg.training.lr;
  Adam adam(model.params, opts);
  const simworld::ScenarioSpec spec = cfg.scenario_spec(cfg.warmup_ticks() + 1);
  TrainResult result;
  for (long step = 0; step < cfg.training.steps; ++step) {
    model.params.zero_grad();
    Var total;
    for (std::size_t b = 0; b < cfg.training.batch; ++b) {
      const auto index = static_cast<std::uint64_t>(step) * cfg.training.batch + b;
      const simworld::Scenario sc =
          simworld::make_scenario(spec, derive_seed(cfg.training.seed, kTrainStream, index));
      Var loss = episode_loss(model, cfg, simulate_episode(sc, cfg.grid));
      total = b == 0 ? loss : add(total, loss);
    }
    total = scale(total, 1.0 / static_cast<double>(cfg.training.batch));
    const double value = total.value().item();
    if (!std::isfinite(value)) throw DivergenceError(step, value);
    backward(total);
    adam.step();
    result.loss_curve.push_back(value);
    if (on_step) on_step(step, value);
  }
  return result;
}

}  // namespace catnet::harness
