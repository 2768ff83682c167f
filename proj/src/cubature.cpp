#include "homog2/cubature.hpp"

#include "homog2/errors.hpp"
#include "homog2/io.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace homog2 {

namespace {

Eigen::MatrixXd columns(const Eigen::MatrixXd& a, const std::vector<int>& idx) {
  Eigen::MatrixXd out(a.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(k) = a.col(idx[k]);
  return out;
}

// Least squares on the passive columns; entries outside the passive set are 0.
Eigen::VectorXd passive_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const std::vector<bool>& passive) {
  std::vector<int> idx;
  for (int j = 0; j < static_cast<int>(passive.size()); ++j)
    if (passive[j]) idx.push_back(j);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(a.cols());
  if (idx.empty()) return z;
  const Eigen::VectorXd zp = columns(a, idx).colPivHouseholderQr().solve(b);
  for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(k);
  return z;
}

// Moves x toward the passive least-squares solution until it is feasible.
void restore_feasibility(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                         std::vector<bool>& passive, int& iterations, int max_iterations) {
  const int n = static_cast<int>(x.size());
  while (iterations++ < max_iterations) {
    const Eigen::VectorXd z = passive_solve(a, b, passive);
    double alpha = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
      if (passive[j] && z(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - z(j)));
    if (!std::isfinite(alpha)) {
      x = z;
      return;
    }
    x += alpha * (z - x);
    for (int j = 0; j < n; ++j)
      if (passive[j] && x(j) <= 1e-300 + 1e-15 * std::abs(z(j))) {
        passive[j] = false;
        x(j) = 0.0;
      }
  }
}

}  // namespace

double nnls_kkt_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x) {
  const double scale = std::max((a.transpose() * b).cwiseAbs().maxCoeff(), 1e-300);
  const Eigen::VectorXd g = a.transpose() * (a * x - b);
  double res = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x(j) < 0.0) return std::numeric_limits<double>::infinity();
    res = std::max(res, x(j) > 0.0 ? std::abs(g(j)) : std::max(-g(j), 0.0));
  }
  return res / scale;
}

NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd* x0, double tol,
                int max_iterations) {
  const int n = static_cast<int>(a.cols());
  if (b.size() != a.rows()) throw InputError("nnls: right-hand side size mismatch");
  if (max_iterations <= 0) max_iterations = 3 * n + 50;
  NnlsResult res;
  res.x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(n, false), excluded(n, false);
  if (x0) {
    if (x0->size() != n) throw InputError("nnls: warm start size mismatch");
    for (int j = 0; j < n; ++j)
      if ((*x0)(j) > 0.0) {
        passive[j] = true;
        res.x(j) = (*x0)(j);
      }
    restore_feasibility(a, b, res.x, passive, res.iterations, max_iterations);
  }
  const double scale = std::max((a.transpose() * b).cwiseAbs().maxCoeff(), 1e-300);
  res.converged = false;
  while (res.iterations < max_iterations) {
    const Eigen::VectorXd g = a.transpose() * (b - a * res.x);
    int best = -1;
    for (int j = 0; j < n; ++j)
      if (!passive[j] && !excluded[j] && g(j) > tol * scale && (best < 0 || g(j) > g(best))) best = j;
    if (best < 0) {
      res.converged = true;
      break;
    }
    passive[best] = true;
    restore_feasibility(a, b, res.x, passive, res.iterations, max_iterations);
    if (!passive[best]) excluded[best] = true;
  }
  res.kkt = nnls_kkt_residual(a, b, res.x);
  return res;
}

Eigen::MatrixXd mode_gradients(const Mesh& mesh, const QuadratureCache& qc, const Eigen::MatrixXd& vw, int q) {
  const Tri6& el = mesh.elements[q / kQuadPerElement];
  const Tri6Grads& g = qc.grad[q];
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(4, vw.cols());
  for (int a = 0; a < 6; ++a)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) out.row(idx2(i, j)) += g(a, j) * vw.row(2 * el[a] + i);
  return out;
}

CubatureSystem build_cubature_system(const Mesh& mesh, const QuadratureCache& qc, const PodBasis& w,
                                     const PodBasis& y, const PodBasis& yh) {
  const int nq = qc.size();
  const int n = w.rank(), m = y.rank(), l = yh.rank();
  if (w.v.rows() != mesh.num_dofs()) throw InputError("w basis does not match the mesh dofs");
  if (y.v.rows() != 4 * nq || yh.v.rows() != 8 * nq) throw InputError("stress bases do not match the quadrature");
  CubatureSystem sys;
  sys.block = {0, n * m, n * m + 4 * m, n * m + 4 * m + 8 * l, n * m + 4 * m + 8 * l + 1};
  const int rows = sys.block[4];
  Eigen::MatrixXd a(rows, nq);
  for (int q = 0; q < nq; ++q) {
    const Eigen::MatrixXd gq = mode_gradients(mesh, qc, w.v, q);
    const Eigen::MatrixXd bq = y.v.middleRows(4 * q, 4);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> prod = gq.transpose() * bq;
    a.col(q).segment(sys.block[0], n * m) = Eigen::Map<const Eigen::VectorXd>(prod.data(), n * m);
    for (int k = 0; k < m; ++k) a.col(q).segment(sys.block[1] + 4 * k, 4) = bq.col(k);
    for (int k = 0; k < l; ++k) a.col(q).segment(sys.block[2] + 8 * k, 8) = yh.v.col(k).segment(8 * q, 8);
    a(sys.block[3], q) = 1.0;
  }
  sys.h_full = qc.weight;
  sys.volume = qc.weight.sum();
  const Eigen::VectorXd b = a * sys.h_full;
  sys.a_hat = a;
  sys.a_hat.topRows(sys.block[3]) -= (b.head(sys.block[3]) / sys.volume) * Eigen::RowVectorXd::Ones(nq);
  sys.b_hat = Eigen::VectorXd::Zero(rows);
  sys.b_hat(sys.block[3]) = sys.volume;
  sys.sigma.resize(rows);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < m; ++k) sys.sigma(sys.block[0] + i * m + k) = w.sigma(i) * y.sigma(k);
  for (int k = 0; k < m; ++k) sys.sigma.segment(sys.block[1] + 4 * k, 4).setConstant(y.sigma(k));
  for (int k = 0; k < l; ++k) sys.sigma.segment(sys.block[2] + 8 * k, 8).setConstant(yh.sigma(k));
  sys.sigma(sys.block[3]) = 1.0;
  return sys;
}

namespace {

Eigen::VectorXd residual_vector(const CubatureSystem& sys, const std::vector<int>& indices,
                                const Eigen::VectorXd& weights) {
  Eigen::VectorXd r = sys.b_hat;
  for (std::size_t k = 0; k < indices.size(); ++k) r -= weights(k) * sys.a_hat.col(indices[k]);
  return r;
}

std::array<double, 4> standardized(const CubatureSystem& sys, const Eigen::VectorXd& r) {
  std::array<double, 4> out{};
  for (int b = 0; b < 3; ++b) {
    const int off = sys.block[b], len = sys.block[b + 1] - sys.block[b];
    const auto sig = sys.sigma.segment(off, len);
    const double trace = sig.sum();
    out[b] = trace > 0 ? std::sqrt((sig.array() * r.segment(off, len).array().square()).sum()) / trace : 0.0;
  }
  out[3] = std::abs(r(sys.block[3])) / sys.volume;
  return out;
}

}  // namespace

Eigen::VectorXd row_scale(const CubatureSystem& sys, const CubatureConfig& cfg) {
  Eigen::VectorXd s = sys.sigma;
  for (int b = 0; b < 3; ++b) s.segment(sys.block[b], sys.block[b + 1] - sys.block[b]) *= cfg.c[b];
  return s.cwiseSqrt();
}

std::array<double, 4> cubature_residuals(const CubatureSystem& sys, const std::vector<int>& indices,
                                         const Eigen::VectorXd& weights) {
  return standardized(sys, residual_vector(sys, indices, weights));
}

double weighted_residual(const CubatureSystem& sys, const CubatureConfig& cfg, const std::vector<int>& indices,
                         const Eigen::VectorXd& weights) {
  return row_scale(sys, cfg).cwiseProduct(residual_vector(sys, indices, weights)).norm();
}

CubatureScheme select_points(const CubatureSystem& sys, const CubatureConfig& cfg) {
  const int nq = sys.cols();
  CubatureScheme scheme;
  scheme.config = cfg;
  const int k_max = cfg.k_max > 0 ? std::min(cfg.k_max, nq) : std::max(1, nq / 2);
  scheme.config.k_max = k_max;

  const Eigen::VectorXd scale = row_scale(sys, cfg);
  const Eigen::MatrixXd s = scale.asDiagonal() * sys.a_hat;
  const Eigen::VectorXd bs = scale.cwiseProduct(sys.b_hat);
  const Eigen::VectorXd norms = s.colwise().norm().transpose();
  std::vector<bool> candidate(nq, true);
  Eigen::VectorXd rs = bs;
  Eigen::VectorXd h;
  Eigen::MatrixXd sel(s.rows(), 0);

  for (int k = 0; k < k_max; ++k) {
    const Eigen::VectorXd score = s.transpose() * rs;
    int best = -1;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < nq; ++j) {
      if (!candidate[j] || norms(j) <= 0.0) continue;
      const double v = score(j) / norms(j);
      if (v > best_val) {
        best_val = v;
        best = j;
      }
    }
    if (best < 0) break;
    candidate[best] = false;
    scheme.indices.push_back(best);
    sel.conservativeResize(Eigen::NoChange, sel.cols() + 1);
    sel.col(sel.cols() - 1) = s.col(best);
    Eigen::VectorXd start = Eigen::VectorXd::Zero(sel.cols());
    start.head(h.size()) = h;
    const NnlsResult res = nnls(sel, bs, &start);
    h = res.x;
    scheme.nnls_kkt = res.kkt;
    rs = bs - sel * h;
    const auto r = standardized(sys, rs.cwiseQuotient(scale));
    scheme.history.push_back({static_cast<int>(scheme.indices.size()), r, rs.norm()});
    bool done = true;
    for (int b = 0; b < 4; ++b) done = done && r[b] < cfg.eps[b];
    if (done) {
      scheme.converged = true;
      break;
    }
  }
  scheme.weights = h;
  return scheme;
}

std::string residual_csv(const CubatureScheme& scheme) {
  std::ostringstream out;
  out << "iteration,Q,r1,r2,r3,r4\n";
  for (std::size_t k = 0; k < scheme.history.size(); ++k) {
    const auto& st = scheme.history[k];
    out << k + 1 << ',' << st.q;
    for (double r : st.r) out << ',' << fmt17(r);
    out << '\n';
  }
  return out.str();
}

}  // namespace homog2
