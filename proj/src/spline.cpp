#include "homog2/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace homog2 {

namespace {

const std::array<Vec2, kNumHoles> kHoleShift{Vec2(0.0, 0.0), Vec2(-1.0, 0.0), Vec2(-1.0, -1.0),
                                                 Vec2(0.0, -1.0)};

struct SegmentBasis {
  int first;  // control point index multiplying b[0]
  std::array<double, 4> b;
  std::array<double, 4> db;  // derivative w.r.t. the knot coordinate
};

SegmentBasis basis_at(double t) {
  double u = 8.0 * (t - std::floor(t));
  if (u >= 8.0) u = 0.0;
  const int j = static_cast<int>(std::floor(u));
  const double s = u - j;
  SegmentBasis sb;
  sb.first = j - 1;
  sb.b = {(1 - s) * (1 - s) * (1 - s) / 6.0, (3 * s * s * s - 6 * s * s + 4) / 6.0,
          (-3 * s * s * s + 3 * s * s + 3 * s + 1) / 6.0, s * s * s / 6.0};
  sb.db = {-(1 - s) * (1 - s) / 2.0, (9 * s * s - 12 * s) / 6.0, (-9 * s * s + 6 * s + 3) / 6.0, s * s / 2.0};
  return sb;
}

}  // namespace

std::array<Vec2, 8> control_points(double zeta, int hole_index) {
  if (hole_index < 0 || hole_index >= kNumHoles) throw std::out_of_range("hole index must be in 0..3");
  const double z = zeta;
  std::array<Vec2, 8> p{Vec2(0.05 + z, 0.5),         Vec2(0.125 - z, 0.125 - z), Vec2(0.5, 0.05 + z),
                        Vec2(0.875 + z, 0.125 - z), Vec2(0.95 - z, 0.5),         Vec2(0.875 + z, 0.875 + z),
                        Vec2(0.5, 0.95 - z),         Vec2(0.125 - z, 0.875 + z)};
  for (auto& q : p) q += kHoleShift[hole_index];
  return p;
}

Vec2 spline_boundary_target(double zeta, int hole_index, double t) {
  const auto p = control_points(zeta, hole_index);
  const auto sb = basis_at(t);
  Vec2 x = Vec2::Zero();
  for (int r = 0; r < 4; ++r) x += sb.b[r] * p[(sb.first + r + 8) % 8];
  return x;
}

Vec2 spline_tangent(double zeta, int hole_index, double t) {
  const auto p = control_points(zeta, hole_index);
  const auto sb = basis_at(t);
  Vec2 d = Vec2::Zero();
  for (int r = 0; r < 4; ++r) d += sb.db[r] * p[(sb.first + r + 8) % 8];
  return 8.0 * d;
}

double project_to_spline(double zeta, int hole_index, const Vec2& x) {
  constexpr int kSamples = 1024;
  double best_t = 0.0;
  double best_d = 1e300;
  for (int k = 0; k < kSamples; ++k) {
    const double t = static_cast<double>(k) / kSamples;
    const double d = (spline_boundary_target(zeta, hole_index, t) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best_t = t;
    }
  }
  // Gauss-Newton on |S(t) - x|^2 with a bracket of one sample spacing.
  double t = best_t;
  for (int it = 0; it < 50; ++it) {
    const Vec2 r = spline_boundary_target(zeta, hole_index, t) - x;
    const Vec2 d = spline_tangent(zeta, hole_index, t);
    const double step = -r.dot(d) / d.squaredNorm();
    t += std::clamp(step, -1.0 / kSamples, 1.0 / kSamples);
    if (std::abs(step) < 1e-16) break;
  }
  return t - std::floor(t);
}

}  // namespace homog2
