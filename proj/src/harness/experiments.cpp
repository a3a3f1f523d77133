#include "catnet/harness/experiments.hpp"

#include <cstdio>
#include <ostream>
#include <string>

namespace catnet::harness {

namespace {

std::string num(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

TrainedRecord train_and_evaluate(PipelineConfig cfg, const ModuleToggles& modules,
                                 const std::string& id) {
  cfg.modules = modules;
  cfg.id = id;
  CatNet model(cfg, cfg.training.seed);
  TrainedRecord r;
  r.training = train(model, cfg);
  r.metrics = evaluate(model, cfg);
  return r;
}

std::vector<MetricRecord> ablation_suite(const PipelineConfig& cfg) {
  std::vector<MetricRecord> out;
  for (const auto& row : ablation_rows()) {
    out.push_back(train_and_evaluate(cfg, row.modules, row.id).metrics);
  }
  return out;
}

std::vector<MetricRecord> latency_sweep(const CatNet& model, const PipelineConfig& cfg,
                                        const std::vector<long>& latencies) {
  std::vector<MetricRecord> out;
  for (long l : latencies) {
    PipelineConfig c = cfg;
    c.channel.latency_ticks = l;
    c.validate();
    out.push_back(evaluate(model, c));
  }
  return out;
}

std::vector<MetricRecord> retention_sweep(const PipelineConfig& cfg,
                                          const std::vector<double>& ratios) {
  std::vector<MetricRecord> out;
  for (double k : ratios) {
    PipelineConfig c = cfg;
    c.retention = k;
    c.validate();
    out.push_back(train_and_evaluate(c, c.modules, c.id).metrics);
  }
  return out;
}

std::vector<MetricRecord> history_loss_sweep(const CatNet& model, const PipelineConfig& cfg,
                                             const std::vector<double>& drop_rates) {
  std::vector<MetricRecord> out;
  for (double p : drop_rates) {
    PipelineConfig c = cfg;
    c.channel.drop_p = p;
    c.validate();
    out.push_back(evaluate(model, c));
  }
  return out;
}

std::vector<long> default_latencies() { return {0, 1, 2, 3, 4, 5}; }
std::vector<double> default_retentions() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}; }
std::vector<double> default_drop_rates() { return {0.0, 0.2, 0.4, 0.6, 0.8, 0.95}; }

void write_metrics_csv(std::ostream& out, const std::vector<MetricRecord>& rows) {
  out << "config_id,seed,latency_ticks,drop_p,loc_noise,head_noise,retention,iou,mse_to_clean,"
         "frames\n";
  for (const auto& r : rows) {
    out << r.config_id << ',' << r.seed << ',' << r.channel.latency_ticks << ','
        << num(r.channel.drop_p, 4) << ',' << num(r.channel.loc_noise, 4) << ','
        << num(r.channel.head_noise, 4) << ',' << num(r.retention, 4) << ',' << num(r.iou, 6)
        << ',' << num(r.mse_to_clean, 8) << ',' << r.frames << '\n';
  }
}

void write_staleness_csv(std::ostream& out, const std::vector<MetricRecord>& rows) {
  out << "config_id,latency_ticks,staleness,iou,mse_to_clean,frames\n";
  for (const auto& r : rows) {
    for (const auto& [age, bin] : r.by_staleness) {
      out << r.config_id << ',' << r.channel.latency_ticks << ',' << age << ',' << num(bin.iou, 6)
          << ',' << num(bin.mse_to_clean, 8) << ',' << bin.frames << '\n';
    }
  }
}

void write_loss_csv(std::ostream& out, const std::vector<double>& losses) {
  out << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out << i << ',' << num(losses[i], 8) << '\n';
}

}  // namespace catnet::harness
