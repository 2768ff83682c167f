#pragma once

// Quadratic 6-node triangles and the quadrature used throughout.
// Local node order: vertices 1..3, then mid-sides of (1,2), (2,3), (3,1).

#include "homog2/tensor.hpp"

#include <array>
#include <vector>

namespace homog2 {

using Tri6Values = Eigen::Matrix<double, 6, 1>;
using Tri6Grads = Eigen::Matrix<double, 6, 2>;  // row a: dN_a/dxi, dN_a/deta

struct Tri6Shape {
  Tri6Values n;
  Tri6Grads dn;
};

inline Tri6Shape shape_tri6(double xi, double eta) {
  const double l1 = 1.0 - xi - eta;
  const double l2 = xi;
  const double l3 = eta;
  Tri6Shape s;
  s.n << l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1), 4 * l1 * l2, 4 * l2 * l3, 4 * l3 * l1;
  // dl1 = (-1, -1), dl2 = (1, 0), dl3 = (0, 1)
  s.dn << -(4 * l1 - 1), -(4 * l1 - 1),  //
      4 * l2 - 1, 0.0,                   //
      0.0, 4 * l3 - 1,                   //
      4 * (l1 - l2), -4 * l2,            //
      4 * l3, 4 * l2,                    //
      -4 * l3, 4 * (l1 - l3);
  return s;
}

struct TriangleRule {
  std::array<Vec2, 3> points;
  std::array<double, 3> weights;
};

/// 3-point rule on the reference triangle, exact to total degree 2.
inline const TriangleRule& triangle_rule3() {
  static const TriangleRule rule{
      {Vec2(1.0 / 6.0, 1.0 / 6.0), Vec2(2.0 / 3.0, 1.0 / 6.0), Vec2(1.0 / 6.0, 2.0 / 3.0)},
      {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0}};
  return rule;
}

inline constexpr int kQuadPerElement = 3;

/// Gauss-Legendre 3-point rule on [0, 1].
struct LineRule {
  std::array<double, 3> points;
  std::array<double, 3> weights;
};

inline const LineRule& line_rule3() {
  static const LineRule rule{{0.5 - 0.5 * 0.7745966692414834, 0.5, 0.5 + 0.5 * 0.7745966692414834},
                             {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}};
  return rule;
}

/// Quadratic edge shape functions at s in [0, 1] for nodes (start, end, mid).
inline Eigen::Vector3d shape_line3(double s) {
  return Eigen::Vector3d((1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s));
}

/// Two dofs per node: dof(node, c) = 2 node + c.
struct DofMap {
  int num_nodes = 0;
  int dof(int node, int component) const { return 2 * node + component; }
  int size() const { return 2 * num_nodes; }
};

class Mesh;

/// Physical shape gradients, weights and positions at every quadrature point
/// of a mesh, indexed element-major, point-minor (q = 3 e + p).
struct QuadratureCache {
  std::vector<Tri6Grads> grad;  // dN_a/dx_j
  std::vector<Tri6Values> value;
  Eigen::VectorXd weight;  // reference weight times det J
  Eigen::Matrix2Xd point;

  int size() const { return static_cast<int>(weight.size()); }
};

/// Throws GeometryError naming the element if any det J <= 0.
QuadratureCache build_quadrature(const Mesh& mesh);

}  // namespace homog2
