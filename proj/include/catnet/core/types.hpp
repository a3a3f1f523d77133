#pragma once

#include <cmath>
#include <numbers>

#include "catnet/numerics/autograd.hpp"

namespace catnet {

using Tick = long;

// Planar pose: meters and radians, heading kept in (-pi, pi].
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  bool operator==(const Pose2D&) const = default;
};

inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

// C x H x W feature field with its provenance.
struct FeatureGrid {
  Var data;
  int agent_id = 0;
  Tick tick = 0;
  Pose2D pose;

  const Shape& shape() const { return data.shape(); }
};

}  // namespace catnet
