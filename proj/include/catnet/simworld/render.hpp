#pragma once

#include "catnet/core/types.hpp"
#include "catnet/simworld/scene.hpp"

namespace catnet::simworld {

// Channel layout of rendered features.
inline constexpr std::size_t kOccupancyChannel = 0;
inline constexpr std::size_t kRangeChannel = 1;
inline constexpr std::size_t kFeatureChannels = 8;

struct GridSpec {
  std::size_t height = 32, width = 32;
  double cell = 1.0;  // meters per cell

  bool operator==(const GridSpec&) const = default;
};

// Local frame of an agent: origin at the pose, u along the heading, v to its
// left. Cell (r, c) has its center at u = (c + 0.5 - W/2) * cell,
// v = (r + 0.5 - H/2) * cell.
struct Vec2 {
  double x = 0.0, y = 0.0;
};
Vec2 local_to_world(const Pose2D& pose, Vec2 local);
Vec2 world_to_local(const Pose2D& pose, Vec2 world);

// Fraction of each cell covered by objects within `fov` meters of the agent,
// estimated from 4 x 4 sub-samples. H x W in [0, 1].
Tensor render_occupancy(const Scene& scene, const Pose2D& pose, const GridSpec& grid, double fov);

// Occupancy, a sensing-range mask and six sinusoidal coordinate channels.
// Throws unless H and W are divisible by 4.
FeatureGrid render_bev(const Scene& scene, const Pose2D& pose, const GridSpec& grid, double fov,
                       int agent_id = 0, Tick tick = 0);

// Sampling positions (2 x H x W, row/col in the sender grid) of every ego cell.
Tensor ego_sampling_coords(const Pose2D& sender, const Pose2D& ego, const GridSpec& grid);

// Resamples a sender-frame feature into the ego frame; unmapped cells read zero.
FeatureGrid transform_to_ego(const FeatureGrid& feature, const Pose2D& sender_pose,
                             const Pose2D& ego_pose, const GridSpec& grid);

}  // namespace catnet::simworld
