#include "catnet/simworld/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace catnet::simworld {

namespace {

// Keeps [c - half, c + half] inside [lo, hi], reflecting position and velocity.
void reflect(double& c, double& v, double half, double lo, double hi) {
  const double low = lo + half, high = hi - half;
  if (low > high) {
    c = 0.5 * (lo + hi);
    v = 0.0;
    return;
  }
  for (int i = 0; i < 8 && (c < low || c > high); ++i) {
    if (c > high) {
      c = 2.0 * high - c;
      v = -std::abs(v);
    } else {
      c = 2.0 * low - c;
      v = std::abs(v);
    }
  }
  if (c < low || c > high) c = std::clamp(c, low, high);
}

}  // namespace

Scene step_scene(const Scene& scene) {
  Scene next = scene;
  for (auto& o : next.objects) {
    o.x += o.vx;
    o.y += o.vy;
    reflect(o.x, o.vx, 0.5 * o.w, scene.bounds.xmin, scene.bounds.xmax);
    reflect(o.y, o.vy, 0.5 * o.h, scene.bounds.ymin, scene.bounds.ymax);
  }
  return next;
}

Scene random_scene(const SceneSpec& spec, std::uint64_t seed) {
  const Bounds& b = spec.bounds;
  if (!(b.xmax - b.xmin > spec.max_size && b.ymax - b.ymin > spec.max_size)) {
    throw std::invalid_argument("random_scene: bounds too small for objects");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> size(spec.min_size, spec.max_size);
  std::uniform_real_distribution<double> speed(spec.min_speed, spec.max_speed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Scene s;
  s.bounds = b;
  s.seed = seed;
  for (std::size_t i = 0; i < spec.objects; ++i) {
    SceneObject o;
    o.w = size(rng);
    o.h = size(rng);
    o.x = b.xmin + o.w / 2 + unit(rng) * (b.xmax - b.xmin - o.w);
    o.y = b.ymin + o.h / 2 + unit(rng) * (b.ymax - b.ymin - o.h);
    const double a = angle(rng), v = speed(rng);
    o.vx = v * std::cos(a);
    o.vy = v * std::sin(a);
    s.objects.push_back(o);
  }
  return s;
}

}  // namespace catnet::simworld
