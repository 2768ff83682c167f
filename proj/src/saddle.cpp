#include "homog2/saddle.hpp"

#include "homog2/errors.hpp"

#include <Eigen/SparseQR>

#include <map>
#include <sstream>

namespace homog2 {

const char* to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::PbcPair: return "pbc_pair";
    case ConstraintKind::TopIntegral: return "top_integral";
    case ConstraintKind::RightIntegral: return "right_integral";
    case ConstraintKind::RigidBody: return "rigid_body";
  }
  return "unknown";
}

void check_constraint_rank(const ConstraintSet& cs, double tol) {
  if (static_cast<int>(cs.kind.size()) != cs.rows()) throw SolverError("constraint labels do not match rows");
  if (cs.rows() == 0) return;
  // Normalize rows so the threshold is scale free.
  Eigen::VectorXd inv(cs.rows());
  for (int r = 0; r < cs.rows(); ++r) inv(r) = 1.0;
  SpMat rows_major = cs.c;
  Eigen::VectorXd norm2 = Eigen::VectorXd::Zero(cs.rows());
  for (int k = 0; k < rows_major.outerSize(); ++k)
    for (SpMat::InnerIterator it(rows_major, k); it; ++it) norm2(it.row()) += it.value() * it.value();
  for (int r = 0; r < cs.rows(); ++r) {
    if (norm2(r) == 0.0) throw SolverError(std::string("empty constraint row ") + std::to_string(r) + " (" +
                                           to_string(cs.kind[r]) + ")");
    inv(r) = 1.0 / std::sqrt(norm2(r));
  }
  SpMat ct = (inv.asDiagonal() * cs.c).transpose();
  ct.makeCompressed();
  Eigen::SparseQR<SpMat, Eigen::COLAMDOrdering<int>> qr;
  qr.setPivotThreshold(tol);
  qr.compute(ct);
  if (qr.info() != Eigen::Success) throw SolverError("sparse QR of the constraint matrix failed");
  const int rank = static_cast<int>(qr.rank());
  if (rank == cs.rows()) return;
  std::map<std::string, int> dependent;
  const auto& perm = qr.colsPermutation().indices();
  for (int k = rank; k < cs.rows(); ++k) ++dependent[to_string(cs.kind[perm(k)])];
  std::ostringstream msg;
  msg << "constraint matrix has rank " << rank << " < " << cs.rows() << " rows; dependent rows:";
  for (const auto& [name, n] : dependent) msg << ' ' << name << " x" << n;
  throw SolverError(msg.str());
}

SaddleSolver::SaddleSolver(const SpMat& c, double scale) : n_(static_cast<int>(c.cols())), nc_(static_cast<int>(c.rows())) {
  Eigen::VectorXd rmax = Eigen::VectorXd::Zero(nc_);
  std::vector<int> nnz(nc_, 0);
  for (int k = 0; k < c.outerSize(); ++k)
    for (SpMat::InnerIterator it(c, k); it; ++it) {
      rmax(it.row()) = std::max(rmax(it.row()), std::abs(it.value()));
      ++nnz[it.row()];
    }
  row_factor_.resize(nc_);
  for (int r = 0; r < nc_; ++r) row_factor_(r) = rmax(r) > 0 ? scale / rmax(r) : 1.0;

  const int dense_nnz = std::max(200, n_ / 10);
  std::vector<int> slot(nc_);
  for (int r = 0; r < nc_; ++r) {
    if (nnz[r] > dense_nnz) {
      slot[r] = static_cast<int>(dense_rows_.size());
      dense_rows_.push_back(r);
    } else {
      slot[r] = static_cast<int>(sparse_rows_.size());
      sparse_rows_.push_back(r);
    }
  }
  std::vector<Eigen::Triplet<double>> trip;
  d_dense_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dense_rows_.size()), n_);
  for (int k = 0; k < c.outerSize(); ++k)
    for (SpMat::InnerIterator it(c, k); it; ++it) {
      const int r = static_cast<int>(it.row());
      const double v = row_factor_(r) * it.value();
      if (nnz[r] > dense_nnz)
        d_dense_(slot[r], it.col()) = v;
      else
        trip.emplace_back(slot[r], it.col(), v);
    }
  c_sparse_.resize(static_cast<Eigen::Index>(sparse_rows_.size()), n_);
  c_sparse_.setFromTriplets(trip.begin(), trip.end());
}

void SaddleSolver::factorize(const SpMat& k) {
  if (k.rows() != n_ || k.cols() != n_) throw SolverError("stiffness size does not match the constraint matrix");
  const int ns = static_cast<int>(sparse_rows_.size());
  const int nd = static_cast<int>(dense_rows_.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(k.nonZeros() + 2 * c_sparse_.nonZeros());
  for (int j = 0; j < k.outerSize(); ++j)
    for (SpMat::InnerIterator it(k, j); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  for (int j = 0; j < c_sparse_.outerSize(); ++j)
    for (SpMat::InnerIterator it(c_sparse_, j); it; ++it) {
      trip.emplace_back(n_ + it.row(), it.col(), it.value());
      trip.emplace_back(it.col(), n_ + it.row(), it.value());
    }
  kkt_.resize(n_ + ns, n_ + ns);
  kkt_.setFromTriplets(trip.begin(), trip.end());
  kkt_.makeCompressed();
  factorized_ = false;
  if (!analyzed_ || kkt_.nonZeros() != pattern_nnz_) {
    lu_.analyzePattern(kkt_);
    analyzed_ = true;
    pattern_nnz_ = kkt_.nonZeros();
  }
  lu_.factorize(kkt_);
  if (lu_.info() != Eigen::Success)
    throw SolverError("saddle factorization failed (" + lu_.lastErrorMessage() +
                      "); structural mechanism or rank-deficient constraints; inertia not available from LU");
  if (nd > 0) {
    Eigen::MatrixXd dt = Eigen::MatrixXd::Zero(n_ + ns, nd);
    dt.topRows(n_) = d_dense_.transpose();
    border_ = lu_.solve(dt);
    schur_.compute(d_dense_ * border_.topRows(n_));
    if (schur_.rank() < nd) throw SolverError("dense constraint rows are dependent on the factorized system");
  }
  factorized_ = true;
}

Eigen::MatrixXd SaddleSolver::solve_bordered(const Eigen::MatrixXd& rhs) const {
  const int ns = static_cast<int>(sparse_rows_.size());
  const int nd = static_cast<int>(dense_rows_.size());
  Eigen::MatrixXd sol(n_ + ns + nd, rhs.cols());
  Eigen::MatrixXd z = lu_.solve(rhs.topRows(n_ + ns));
  if (nd > 0) {
    const Eigen::MatrixXd lam = schur_.solve(d_dense_ * z.topRows(n_) - rhs.bottomRows(nd));
    z -= border_ * lam;
    sol.bottomRows(nd) = lam;
  }
  sol.topRows(n_ + ns) = z;
  return sol;
}

Eigen::MatrixXd SaddleSolver::apply(const Eigen::MatrixXd& sol) const {
  const int ns = static_cast<int>(sparse_rows_.size());
  const int nd = static_cast<int>(dense_rows_.size());
  Eigen::MatrixXd out(n_ + ns + nd, sol.cols());
  out.topRows(n_ + ns) = kkt_ * sol.topRows(n_ + ns);
  if (nd > 0) {
    out.topRows(n_) += d_dense_.transpose() * sol.bottomRows(nd);
    out.bottomRows(nd) = d_dense_ * sol.topRows(n_);
  }
  return out;
}

void SaddleSolver::solve(const Eigen::MatrixXd& rhs_x, const Eigen::MatrixXd& rhs_m, Eigen::MatrixXd& x,
                         Eigen::MatrixXd& m) const {
  if (!factorized_) throw SolverError("saddle system used before factorization");
  const int ns = static_cast<int>(sparse_rows_.size());
  const Eigen::Index k = rhs_x.cols();
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n_ + nc_, k);
  rhs.topRows(n_) = rhs_x;
  if (rhs_m.size() != 0) {
    for (int i = 0; i < ns; ++i) rhs.row(n_ + i) = row_factor_(sparse_rows_[i]) * rhs_m.row(sparse_rows_[i]);
    for (std::size_t i = 0; i < dense_rows_.size(); ++i)
      rhs.row(n_ + ns + i) = row_factor_(dense_rows_[i]) * rhs_m.row(dense_rows_[i]);
  }
  Eigen::MatrixXd sol = solve_bordered(rhs);
  const double rnorm = rhs.norm();
  double res = (apply(sol) - rhs).norm();
  for (int refine = 0; refine < 10 && res > 1e-12 * rnorm; ++refine) {
    const Eigen::MatrixXd next = sol + solve_bordered(rhs - apply(sol));
    const double next_res = (apply(next) - rhs).norm();
    if (!(next_res < res)) break;
    const bool stalled = next_res > 0.5 * res;
    sol = next;
    res = next_res;
    if (stalled && res <= 1e-10 * rnorm) break;
  }
  if (!sol.allFinite() || res > 1e-10 * std::max(rnorm, 1e-300)) {
    std::ostringstream msg;
    msg << "saddle solve relative residual " << res / std::max(rnorm, 1e-300) << " exceeds 1e-10";
    throw SolverError(msg.str());
  }
  x = sol.topRows(n_);
  m.resize(nc_, k);
  for (int i = 0; i < ns; ++i) m.row(sparse_rows_[i]) = row_factor_(sparse_rows_[i]) * sol.row(n_ + i);
  for (std::size_t i = 0; i < dense_rows_.size(); ++i)
    m.row(dense_rows_[i]) = row_factor_(dense_rows_[i]) * sol.row(n_ + ns + i);
}

SaddleResult solve_saddle(const SaddleSystem& system) {
  const double scale = std::max(system.k.coeffs().cwiseAbs().maxCoeff(), 1e-300);
  SaddleSolver solver(system.c, scale);
  solver.factorize(system.k);
  Eigen::MatrixXd x, m;
  solver.solve(-system.f, Eigen::MatrixXd(), x, m);
  return {x.col(0), m.col(0)};
}

}  // namespace homog2
