#pragma once

#include "homog2/fem.hpp"
#include "homog2/mesh.hpp"

#include <vector>

namespace homog2 {

/// Morph of the parent domain into the geometry for one value of zeta,
/// sampled at the quadrature points of the parent mesh.
struct TransformationMap {
  double zeta = 0.0;
  Eigen::Matrix2Xd d;        // nodal morphing displacement (mm)
  std::vector<Mat2> f_mu;    // per quadrature point
  std::vector<Mat2> f_mu_inv;
  Eigen::VectorXd jdet;
  Eigen::Matrix2Xd x_mu;     // mapped quadrature point positions (mm)
  double volume = 0.0;       // integral of jdet over the parent domain

  double min_jdet() const { return jdet.minCoeff(); }
};

struct AuxiliaryElasticity {
  double young = 1.0;  // MPa
  double poisson = 0.25;
};

/// Identity map (for meshes that are already in physical configuration).
TransformationMap identity_transform(const Mesh& mesh, const QuadratureCache& qc);

/// Linear plane-strain solve with d = 0 on the outer boundary and d equal to
/// the spline displacement on every hole node. Throws GeometryError if the
/// smallest jdet is below `min_jdet`.
TransformationMap solve_auxiliary_transform(const Mesh& mesh, const QuadratureCache& qc, double zeta,
                                            double min_jdet = 0.05, const AuxiliaryElasticity& aux = {});

/// Node positions of the morphed mesh.
Eigen::Matrix2Xd morphed_nodes(const Mesh& mesh, const TransformationMap& map);

}  // namespace homog2
