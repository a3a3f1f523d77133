#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "catnet/harness/experiments.hpp"
#include "catnet/numerics/param_io.hpp"

namespace fs = std::filesystem;
using namespace catnet;
using namespace catnet::harness;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::string params;
};

void add_common(CLI::App* cmd, Common& c, bool with_params) {
  cmd->add_option("--config", c.config, "pipeline config JSON (defaults when omitted)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "overrides training.seed");
  if (with_params) {
    cmd->add_option("--params", c.params, "trained parameters (.catp) to load")
        ->check(CLI::ExistingFile);
  }
}

PipelineConfig resolve(const Common& c) {
  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : load_config(c.config);
  if (c.seed) cfg.training.seed = *c.seed;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const Common& c, const std::string& name) {
  fs::create_directories(c.out);
  std::ofstream f(fs::path(c.out) / name, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (fs::path(c.out) / name).string());
  return f;
}

void write_metrics(const Common& c, const std::vector<MetricRecord>& rows) {
  auto m = open_out(c, "metrics.csv");
  write_metrics_csv(m, rows);
  auto s = open_out(c, "staleness.csv");
  write_staleness_csv(s, rows);
}

// A model for evaluation: loaded from --params, else trained under cfg.
void prepare(CatNet& model, const PipelineConfig& cfg, const Common& c) {
  if (!c.params.empty()) {
    assign_parameters(model.params, load_parameters(c.params));
    return;
  }
  TrainResult tr = train(model, cfg);
  auto loss = open_out(c, "loss_curve.csv");
  write_loss_csv(loss, tr.loss_curve);
  save_parameters(model.params, fs::path(c.out) / "params.catp");
}

int cmd_run(const Common& c) {
  const PipelineConfig cfg = resolve(c);
  CatNet model(cfg, cfg.training.seed);
  if (!c.params.empty()) assign_parameters(model.params, load_parameters(c.params));
  std::vector<simworld::TraceRow> trace;
  MetricRecord r = run_pipeline(model, cfg, eval_scenarios(cfg), &trace);
  write_metrics(c, {r});
  auto t = open_out(c, "trace.csv");
  simworld::write_trace_csv(t, trace);
  std::printf("%s iou %.6f mse_to_clean %.8f\n", r.config_id.c_str(), r.iou, r.mse_to_clean);
  return 0;
}

int cmd_train(const Common& c) {
  const PipelineConfig cfg = resolve(c);
  CatNet model(cfg, cfg.training.seed);
  TrainResult tr = train(model, cfg, [&](long step, double loss) {
    if (step % 50 == 0 || step + 1 == cfg.training.steps) {
      std::fprintf(stderr, "step %ld loss %.6f\n", step, loss);
    }
  });
  auto loss = open_out(c, "loss_curve.csv");
  write_loss_csv(loss, tr.loss_curve);
  save_parameters(model.params, fs::path(c.out) / "params.catp");
  std::vector<simworld::TraceRow> trace;
  MetricRecord r = run_pipeline(model, cfg, eval_scenarios(cfg), &trace);
  write_metrics(c, {r});
  auto t = open_out(c, "trace.csv");
  simworld::write_trace_csv(t, trace);
  std::printf("%s iou %.6f mse_to_clean %.8f\n", r.config_id.c_str(), r.iou, r.mse_to_clean);
  return 0;
}

int cmd_ablate(const Common& c) {
  const PipelineConfig cfg = resolve(c);
  std::vector<MetricRecord> rows;
  for (const auto& row : ablation_rows()) {
    rows.push_back(train_and_evaluate(cfg, row.modules, row.id).metrics);
    std::printf("%-14s iou %.6f mse_to_clean %.8f\n", row.id.c_str(), rows.back().iou,
                rows.back().mse_to_clean);
  }
  write_metrics(c, rows);
  return 0;
}

int cmd_sweep(const Common& c, const std::string& axis) {
  const PipelineConfig cfg = resolve(c);
  std::vector<MetricRecord> rows;
  if (axis == "retention") {
    if (!c.params.empty()) throw ConfigError("--params does not apply to the retention sweep");
    rows = retention_sweep(cfg, default_retentions());
  } else {
    CatNet model(cfg, cfg.training.seed);
    prepare(model, cfg, c);
    rows = axis == "latency" ? latency_sweep(model, cfg, default_latencies())
                             : history_loss_sweep(model, cfg, default_drop_rates());
  }
  for (const auto& r : rows) {
    std::printf("L=%ld drop=%.2f k=%.2f iou %.6f mse_to_clean %.8f\n", r.channel.latency_ticks,
                r.channel.drop_p, r.retention, r.iou, r.mse_to_clean);
  }
  write_metrics(c, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CATNet desk-scale cooperative perception pipeline"};
  app.require_subcommand(1);
  Common common;
  std::string axis;
  auto* run = app.add_subcommand("run", "evaluate a model on the evaluation scenarios");
  add_common(run, common, true);
  auto* tr = app.add_subcommand("train", "train, save parameters, evaluate");
  add_common(tr, common, false);
  auto* ab = app.add_subcommand("ablate", "train and evaluate the seven module combinations");
  add_common(ab, common, false);
  auto* sw = app.add_subcommand("sweep", "latency, retention or packet-drop sweep");
  add_common(sw, common, true);
  sw->add_option("--axis", axis, "sweep axis")
      ->required()
      ->check(CLI::IsMember({"latency", "retention", "drop"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(common);
    if (*tr) return cmd_train(common);
    if (*ab) return cmd_ablate(common);
    return cmd_sweep(common, axis);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
