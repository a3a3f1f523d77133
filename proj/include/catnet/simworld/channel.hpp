#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "catnet/core/types.hpp"

namespace catnet::simworld {

struct ChannelConfig {
  long max_latency_ticks = 0;      // L: latency ~ U{0..L}
  double drop_probability = 0.0;   // p
  double loc_sigma = 0.0;          // meters
  double head_sigma = 0.0;         // radians
  std::uint64_t seed = 0;

  // Throws on negative L or sigmas, or p outside [0, 1].
  void validate() const;
};

struct FeaturePacket {
  FeatureGrid feature;
  int sender = 0;
  Tick emit_tick = 0;
  Tick arrive_tick = 0;
  bool dropped = false;
  Pose2D reported_pose;
};

// Gaussian position and heading noise; heading re-wrapped into (-pi, pi].
Pose2D perturb_pose(const Pose2D& pose, const ChannelConfig& cfg, std::mt19937_64& rng);

// Independent random streams for drops, latencies and pose noise, so sweeping
// one channel parameter leaves the other draws paired.
struct ChannelRng {
  std::mt19937_64 drop, latency, noise;
  explicit ChannelRng(std::uint64_t seed);
};

// Decides drop and latency of each packet in order, then returns the
// survivors with arrive_tick <= now sorted by (arrive_tick, sender).
std::vector<FeaturePacket> channel_deliver(std::vector<FeaturePacket> packets,
                                           const ChannelConfig& cfg, Tick now, ChannelRng& rng);

struct TraceRow {
  Tick tick = 0;
  int sender = 0;
  Tick emit_tick = 0;
  Tick arrive_tick = 0;
  bool dropped = false;
};

// Stateful channel: packets are admitted at emission and released in arrival
// order. Every admitted packet produces one trace row, on delivery or drop.
class Channel {
 public:
  explicit Channel(ChannelConfig cfg);

  // Draws drop, latency and reported-pose noise for a packet emitted now.
  void emit(FeatureGrid feature, int sender, Tick emit_tick, const Pose2D& true_pose);

  // Packets arriving by `now`, sorted by (arrive_tick, sender).
  std::vector<FeaturePacket> deliver(Tick now);

  const std::vector<TraceRow>& trace() const { return trace_; }
  const ChannelConfig& config() const { return cfg_; }

 private:
  ChannelConfig cfg_;
  ChannelRng rng_;
  std::vector<FeaturePacket> in_flight_;
  std::vector<TraceRow> trace_;
};

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);

}  // namespace catnet::simworld
