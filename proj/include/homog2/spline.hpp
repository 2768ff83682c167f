#pragma once

// Hole boundaries: closed uniform cubic B-splines over eight control points.
// Curve parameter t in [0, 1) maps to knot coordinate u = 8 t; the curve
// passes through (P[k-1] + 4 P[k] + P[k+1]) / 6 at t = k / 8.

#include "homog2/tensor.hpp"

#include <array>

namespace homog2 {

inline constexpr int kNumHoles = 4;
inline constexpr double kParentZeta = 0.025;  // mm

/// Control points (mm) of hole `hole_index`: 0 top-right, 1 top-left,
/// 2 bottom-left, 3 bottom-right. Throws std::out_of_range for other indices.
std::array<Vec2, 8> control_points(double zeta, int hole_index);

/// Point (mm) on the closed spline, periodic in t with period 1.
Vec2 spline_boundary_target(double zeta, int hole_index, double t);

/// dS/dt at t.
Vec2 spline_tangent(double zeta, int hole_index, double t);

/// Curve parameter of the closest spline point to x.
double project_to_spline(double zeta, int hole_index, const Vec2& x);

}  // namespace homog2
