#pragma once

#include "homog2/fem.hpp"
#include "homog2/tensor.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace homog2 {

using Tri6 = std::array<int, 6>;

/// Quadratic boundary edge: end nodes then mid-side node.
using Edge3 = std::array<int, 3>;

struct HoleNode {
  int node;
  int hole;
  double t;  // parent spline parameter
};

struct MeshOptions {
  double zeta_parent = 0.025;
  double pairing_tolerance = 1e-8;
  bool has_holes = true;  // project hole_k nodes onto the parent spline
};

/// Parent-domain mesh with periodic pairing and hole parameters resolved.
class Mesh {
 public:
  Eigen::Matrix2Xd nodes;
  std::vector<Tri6> elements;
  std::map<std::string, std::vector<int>> tags;
  int quadrature_rule = kQuadPerElement;

  // Derived at load.
  std::vector<std::pair<int, int>> lr_pairs;  // (left, right)
  std::vector<std::pair<int, int>> bt_pairs;  // (bottom, top)
  std::array<int, 4> corner{-1, -1, -1, -1};  // bottom-left, bottom-right, top-right, top-left
  std::vector<Edge3> top_edges;
  std::vector<Edge3> right_edges;
  std::vector<int> outer_nodes;
  std::vector<HoleNode> hole_nodes;
  Eigen::Vector4d bounds = Eigen::Vector4d::Zero();  // xmin, xmax, ymin, ymax
  double zeta_parent = 0.025;

  int num_nodes() const { return static_cast<int>(nodes.cols()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  int num_dofs() const { return 2 * num_nodes(); }
  int num_quad() const { return kQuadPerElement * num_elements(); }
  DofMap dof_map() const { return DofMap{num_nodes()}; }
  bool is_periodic_cell() const { return corner[0] >= 0; }

  /// Same topology and derived data with new node positions (used for
  /// explicitly morphed meshes). Outer boundary nodes must be unchanged.
  Mesh with_nodes(const Eigen::Matrix2Xd& moved) const;
};

Mesh parse_mesh(const std::string& json_text, const MeshOptions& opts = {});
Mesh load_mesh(const std::filesystem::path& path, const MeshOptions& opts = {});

/// Area of the region covered by the elements, from the quadratic edge
/// curves (Green's theorem); exact for quadratic isoparametric geometry.
double mesh_area(const Mesh& mesh);

}  // namespace homog2
