#include "catnet/simworld/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "catnet/numerics/ops.hpp"

namespace catnet::simworld {

namespace {

constexpr int kSub = 4;

void check_grid(const GridSpec& g) {
  if (g.height == 0 || g.width == 0 || g.height % 4 != 0 || g.width % 4 != 0) {
    throw std::invalid_argument("grid " + std::to_string(g.height) + "x" +
                                std::to_string(g.width) + " must be divisible by 4");
  }
  if (!(g.cell > 0.0)) throw std::invalid_argument("grid cell size must be positive");
}

Vec2 cell_local(const GridSpec& g, double r, double c) {
  return {(c + 0.5 - 0.5 * static_cast<double>(g.width)) * g.cell,
          (r + 0.5 - 0.5 * static_cast<double>(g.height)) * g.cell};
}

bool covered(const Scene& scene, Vec2 p) {
  for (const auto& o : scene.objects) {
    if (std::abs(p.x - o.x) <= 0.5 * o.w && std::abs(p.y - o.y) <= 0.5 * o.h) return true;
  }
  return false;
}

}  // namespace

Vec2 local_to_world(const Pose2D& pose, Vec2 l) {
  const double c = std::cos(pose.heading), s = std::sin(pose.heading);
  return {pose.x + c * l.x - s * l.y, pose.y + s * l.x + c * l.y};
}

Vec2 world_to_local(const Pose2D& pose, Vec2 w) {
  const double c = std::cos(pose.heading), s = std::sin(pose.heading);
  const double dx = w.x - pose.x, dy = w.y - pose.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

Tensor render_occupancy(const Scene& scene, const Pose2D& pose, const GridSpec& grid, double fov) {
  check_grid(grid);
  Tensor occ({grid.height, grid.width});
  const double fov2 = fov * fov;
  for (std::size_t r = 0; r < grid.height; ++r) {
    for (std::size_t c = 0; c < grid.width; ++c) {
      int hits = 0;
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          const double rr = static_cast<double>(r) - 0.5 + (sy + 0.5) / kSub;
          const double cc = static_cast<double>(c) - 0.5 + (sx + 0.5) / kSub;
          const Vec2 l = cell_local(grid, rr, cc);
          if (l.x * l.x + l.y * l.y > fov2) continue;
          hits += covered(scene, local_to_world(pose, l));
        }
      }
      occ.at(r, c) = hits / double(kSub * kSub);
    }
  }
  return occ;
}

FeatureGrid render_bev(const Scene& scene, const Pose2D& pose, const GridSpec& grid, double fov,
                       int agent_id, Tick tick) {
  check_grid(grid);
  const std::size_t h = grid.height, w = grid.width, plane = h * w;
  Tensor f({kFeatureChannels, h, w});
  Tensor occ = render_occupancy(scene, pose, grid, fov);
  std::copy(occ.data().begin(), occ.data().end(), f.data().begin());
  const double span_u = static_cast<double>(w) * grid.cell;
  const double span_v = static_cast<double>(h) * grid.cell;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const Vec2 l = cell_local(grid, double(r), double(c));
      const std::size_t p = r * w + c;
      f[kRangeChannel * plane + p] = l.x * l.x + l.y * l.y <= fov * fov ? 1.0 : 0.0;
      const double au = two_pi * l.x / span_u, av = two_pi * l.y / span_v;
      f[2 * plane + p] = std::sin(au);
      f[3 * plane + p] = std::cos(au);
      f[4 * plane + p] = std::sin(av);
      f[5 * plane + p] = std::cos(av);
      f[6 * plane + p] = std::sin(2 * au);
      f[7 * plane + p] = std::sin(2 * av);
    }
  }
  return {Var(std::move(f)), agent_id, tick, pose};
}

Tensor ego_sampling_coords(const Pose2D& sender, const Pose2D& ego, const GridSpec& grid) {
  check_grid(grid);
  const std::size_t h = grid.height, w = grid.width, plane = h * w;
  Tensor coords({2, h, w});
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const Vec2 s = world_to_local(sender, local_to_world(ego, cell_local(grid, double(r), double(c))));
      coords[r * w + c] = s.y / grid.cell + 0.5 * static_cast<double>(h) - 0.5;
      coords[plane + r * w + c] = s.x / grid.cell + 0.5 * static_cast<double>(w) - 0.5;
    }
  }
  return coords;
}

FeatureGrid transform_to_ego(const FeatureGrid& feature, const Pose2D& sender_pose,
                             const Pose2D& ego_pose, const GridSpec& grid) {
  const Shape& s = feature.shape();
  if (s.size() != 3 || s[1] != grid.height || s[2] != grid.width) {
    throw std::invalid_argument("transform_to_ego: feature " + shape_str(s) + " does not match grid " +
                                std::to_string(grid.height) + "x" + std::to_string(grid.width));
  }
  Var out = bilinear_sample(feature.data, Var(ego_sampling_coords(sender_pose, ego_pose, grid)));
  return {out, feature.agent_id, feature.tick, ego_pose};
}

}  // namespace catnet::simworld
