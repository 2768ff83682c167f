#include "homog2/transform.hpp"

#include "homog2/errors.hpp"
#include "homog2/spline.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <sstream>

namespace homog2 {

namespace {

void evaluate_at_quadrature(const Mesh& mesh, const QuadratureCache& qc, TransformationMap& map) {
  const int nq = qc.size();
  map.f_mu.resize(nq);
  map.f_mu_inv.resize(nq);
  map.jdet.resize(nq);
  map.x_mu.resize(2, nq);
  Eigen::Matrix<double, 2, 6> de;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int a = 0; a < 6; ++a) de.col(a) = map.d.col(mesh.elements[e][a]);
    for (int p = 0; p < kQuadPerElement; ++p) {
      const int q = kQuadPerElement * e + p;
      const Mat2 f = Mat2::Identity() + de * qc.grad[q];
      map.f_mu[q] = f;
      map.f_mu_inv[q] = f.inverse();
      map.jdet(q) = std::abs(f.determinant());
      map.x_mu.col(q) = qc.point.col(q) + de * qc.value[q];
      if (!(f.determinant() > 0.0)) map.jdet(q) = f.determinant();
    }
  }
  map.volume = qc.weight.dot(map.jdet);
}

}  // namespace

TransformationMap identity_transform(const Mesh& mesh, const QuadratureCache& qc) {
  TransformationMap map;
  map.zeta = mesh.zeta_parent;
  map.d = Eigen::Matrix2Xd::Zero(2, mesh.num_nodes());
  evaluate_at_quadrature(mesh, qc, map);
  return map;
}

TransformationMap solve_auxiliary_transform(const Mesh& mesh, const QuadratureCache& qc, double zeta,
                                            double min_jdet, const AuxiliaryElasticity& aux) {
  TransformationMap map;
  map.zeta = zeta;
  map.d = Eigen::Matrix2Xd::Zero(2, mesh.num_nodes());

  const int ndof = mesh.num_dofs();
  std::vector<int> fixed(ndof, 0);
  Eigen::VectorXd prescribed = Eigen::VectorXd::Zero(ndof);
  for (int id : mesh.outer_nodes) fixed[2 * id] = fixed[2 * id + 1] = 1;
  bool any_motion = false;
  for (const auto& h : mesh.hole_nodes) {
    const Vec2 dh = spline_boundary_target(zeta, h.hole, h.t) - spline_boundary_target(mesh.zeta_parent, h.hole, h.t);
    fixed[2 * h.node] = fixed[2 * h.node + 1] = 1;
    prescribed.segment<2>(2 * h.node) = dh;
    any_motion = any_motion || dh.squaredNorm() > 0.0;
  }

  if (any_motion) {
    std::vector<int> free_index(ndof, -1);
    int nfree = 0;
    for (int i = 0; i < ndof; ++i)
      if (!fixed[i]) free_index[i] = nfree++;

    const double lam = aux.young * aux.poisson / ((1 + aux.poisson) * (1 - 2 * aux.poisson));
    const double mu = aux.young / (2 * (1 + aux.poisson));
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nfree);
    Eigen::Matrix<double, 12, 12> ke;
    for (int e = 0; e < mesh.num_elements(); ++e) {
      ke.setZero();
      for (int p = 0; p < kQuadPerElement; ++p) {
        const int q = kQuadPerElement * e + p;
        const Tri6Grads& g = qc.grad[q];
        const double w = qc.weight(q);
        for (int a = 0; a < 6; ++a)
          for (int b = 0; b < 6; ++b) {
            const double gg = g.row(a).dot(g.row(b));
            for (int i = 0; i < 2; ++i)
              for (int j = 0; j < 2; ++j) {
                double v = lam * g(a, i) * g(b, j) + mu * g(a, j) * g(b, i);
                if (i == j) v += mu * gg;
                ke(2 * a + i, 2 * b + j) += w * v;
              }
          }
      }
      for (int r = 0; r < 12; ++r) {
        const int gr = 2 * mesh.elements[e][r / 2] + r % 2;
        if (fixed[gr]) continue;
        for (int c = 0; c < 12; ++c) {
          const int gc = 2 * mesh.elements[e][c / 2] + c % 2;
          if (fixed[gc])
            rhs(free_index[gr]) -= ke(r, c) * prescribed(gc);
          else
            trip.emplace_back(free_index[gr], free_index[gc], ke(r, c));
        }
      }
    }
    Eigen::SparseMatrix<double> k(nfree, nfree);
    k.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(k);
    if (ldlt.info() != Eigen::Success) throw GeometryError("auxiliary morphing system is singular");
    const Eigen::VectorXd x = ldlt.solve(rhs);
    for (int i = 0; i < ndof; ++i) map.d(i % 2, i / 2) = fixed[i] ? prescribed(i) : x(free_index[i]);
  }

  evaluate_at_quadrature(mesh, qc, map);
  Eigen::Index worst = 0;
  const double jmin = map.jdet.minCoeff(&worst);
  if (!(jmin > min_jdet)) {
    std::ostringstream msg;
    msg << "zeta = " << zeta << " mm outside the validity range: jdet = " << jmin << " at quadrature point "
        << worst << " (element " << worst / kQuadPerElement << "), minimum allowed " << min_jdet;
    throw GeometryError(msg.str());
  }
  return map;
}

Eigen::Matrix2Xd morphed_nodes(const Mesh& mesh, const TransformationMap& map) { return mesh.nodes + map.d; }

}  // namespace homog2
