#pragma once

#include <cstdint>
#include <vector>

namespace catnet::simworld {

// Axis-aligned rectangle moving at constant velocity (meters, meters per tick).
struct SceneObject {
  double x = 0.0, y = 0.0;    // center
  double w = 1.0, h = 1.0;    // extent along x and y
  double vx = 0.0, vy = 0.0;

  bool operator==(const SceneObject&) const = default;
};

struct Bounds {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

  bool operator==(const Bounds&) const = default;
};

struct Scene {
  std::vector<SceneObject> objects;
  Bounds bounds;
  std::uint64_t seed = 0;

  bool operator==(const Scene&) const = default;
};

// Advances every object by one tick. An object whose rectangle would leave the
// bounds is mirrored back across the violated edge and that velocity component
// is negated.
Scene step_scene(const Scene& scene);

struct SceneSpec {
  std::size_t objects = 8;
  Bounds bounds{-24.0, -24.0, 24.0, 24.0};
  double min_size = 1.5, max_size = 4.0;
  double min_speed = 0.3, max_speed = 1.2;
};

// Random rectangles placed fully inside the bounds with random headings of motion.
Scene random_scene(const SceneSpec& spec, std::uint64_t seed);

}  // namespace catnet::simworld
