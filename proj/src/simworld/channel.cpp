#include "catnet/simworld/channel.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <string>

namespace catnet::simworld {

namespace {

bool arrival_order(const FeaturePacket& a, const FeaturePacket& b) {
  if (a.arrive_tick != b.arrive_tick) return a.arrive_tick < b.arrive_tick;
  if (a.sender != b.sender) return a.sender < b.sender;
  return a.emit_tick < b.emit_tick;
}

}  // namespace

void ChannelConfig::validate() const {
  if (max_latency_ticks < 0) {
    throw std::invalid_argument("channel: max latency must be >= 0, got " +
                                std::to_string(max_latency_ticks));
  }
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) {
    throw std::invalid_argument("channel: drop probability must lie in [0, 1], got " +
                                std::to_string(drop_probability));
  }
  if (!(loc_sigma >= 0.0) || !(head_sigma >= 0.0)) {
    throw std::invalid_argument("channel: noise sigmas must be >= 0");
  }
}

Pose2D perturb_pose(const Pose2D& pose, const ChannelConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  // Always three draws so the stream stays aligned when a sigma is zero.
  const double dx = n(rng), dy = n(rng), dh = n(rng);
  return {pose.x + cfg.loc_sigma * dx, pose.y + cfg.loc_sigma * dy,
          wrap_angle(pose.heading + cfg.head_sigma * dh)};
}

ChannelRng::ChannelRng(std::uint64_t seed) {
  std::seed_seq a{seed, std::uint64_t{1}}, b{seed, std::uint64_t{2}}, c{seed, std::uint64_t{3}};
  drop.seed(a);
  latency.seed(b);
  noise.seed(c);
}

namespace {

void draw_fate(FeaturePacket& p, const ChannelConfig& cfg, ChannelRng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<long> lat(0, cfg.max_latency_ticks);
  p.dropped = u(rng.drop) < cfg.drop_probability;
  p.arrive_tick = p.emit_tick + lat(rng.latency);
}

}  // namespace

std::vector<FeaturePacket> channel_deliver(std::vector<FeaturePacket> packets,
                                           const ChannelConfig& cfg, Tick now, ChannelRng& rng) {
  cfg.validate();
  std::vector<FeaturePacket> out;
  for (auto& p : packets) {
    draw_fate(p, cfg, rng);
    if (!p.dropped && p.arrive_tick <= now) out.push_back(std::move(p));
  }
  std::stable_sort(out.begin(), out.end(), arrival_order);
  return out;
}

Channel::Channel(ChannelConfig cfg) : cfg_(cfg), rng_(cfg.seed) { cfg_.validate(); }

void Channel::emit(FeatureGrid feature, int sender, Tick emit_tick, const Pose2D& true_pose) {
  FeaturePacket p;
  p.feature = std::move(feature);
  p.sender = sender;
  p.emit_tick = emit_tick;
  p.reported_pose = perturb_pose(true_pose, cfg_, rng_.noise);
  draw_fate(p, cfg_, rng_);
  if (p.dropped) {
    trace_.push_back({emit_tick, sender, emit_tick, p.arrive_tick, true});
    return;
  }
  in_flight_.push_back(std::move(p));
}

std::vector<FeaturePacket> Channel::deliver(Tick now) {
  std::vector<FeaturePacket> out;
  std::vector<FeaturePacket> keep;
  for (auto& p : in_flight_) {
    if (p.arrive_tick <= now) {
      out.push_back(std::move(p));
    } else {
      keep.push_back(std::move(p));
    }
  }
  in_flight_ = std::move(keep);
  std::stable_sort(out.begin(), out.end(), arrival_order);
  for (const auto& p : out) trace_.push_back({now, p.sender, p.emit_tick, p.arrive_tick, false});
  return out;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "tick,sender,emit_tick,arrive_tick,dropped\n";
  for (const auto& r : rows) {
    out << r.tick << ',' << r.sender << ',' << r.emit_tick << ',' << r.arrive_tick << ','
        << (r.dropped ? 1 : 0) << '\n';
  }
}

}  // namespace catnet::simworld
