#pragma once

#include <iosfwd>
#include <vector>

#include "catnet/harness/train.hpp"

namespace catnet::harness {

struct TrainedRecord {
  MetricRecord metrics;
  TrainResult training;
};

// Trains and evaluates cfg with the given toggles under cfg's seed.
TrainedRecord train_and_evaluate(PipelineConfig cfg, const ModuleToggles& modules,
                                 const std::string& id);

// The seven toggle combinations of ablation_rows(), identical seeds.
std::vector<MetricRecord> ablation_suite(const PipelineConfig& cfg);

// Evaluates one trained model under each latency (ticks), noise unchanged.
std::vector<MetricRecord> latency_sweep(const CatNet& model, const PipelineConfig& cfg,
                                        const std::vector<long>& latencies);
// Trains and evaluates one model per retention ratio.
std::vector<MetricRecord> retention_sweep(const PipelineConfig& cfg,
                                          const std::vector<double>& ratios);
// Evaluates one trained model under each collaborator packet drop rate.
std::vector<MetricRecord> history_loss_sweep(const CatNet& model, const PipelineConfig& cfg,
                                             const std::vector<double>& drop_rates);

std::vector<long> default_latencies();
std::vector<double> default_retentions();
std::vector<double> default_drop_rates();

// metrics.csv columns, in order:
// config_id,seed,latency_ticks,drop_p,loc_noise,head_noise,retention,iou,mse_to_clean,frames
void write_metrics_csv(std::ostream& out, const std::vector<MetricRecord>& rows);
// staleness breakdown: config_id,latency_ticks,staleness,iou,mse_to_clean,frames
void write_staleness_csv(std::ostream& out, const std::vector<MetricRecord>& rows);
// step,loss
void write_loss_csv(std::ostream& out, const std::vector<double>& losses);

}  // namespace catnet::harness
