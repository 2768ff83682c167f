#include "homog2/pod.hpp"

#include "homog2/errors.hpp"

#include <Eigen/SVD>

#include <string>

namespace homog2 {

int energy_rank(const Eigen::VectorXd& sigma, double tol) {
  const double total = sigma.squaredNorm();
  if (total <= 0.0) throw InputError("energy criterion on an all-zero spectrum");
  double kept = 0.0;
  for (int n = 0; n < sigma.size(); ++n) {
    kept += sigma(n) * sigma(n);
    if (1.0 - kept / total < tol) return n + 1;
  }
  return static_cast<int>(sigma.size());
}

PodBasis compute_basis(const Eigen::MatrixXd& x, const PodCriterion& criterion) {
  if (x.size() == 0) throw InputError("POD of an empty snapshot matrix");
  if (!x.allFinite()) throw InputError("POD snapshot matrix has non-finite entries");
  if (x.cwiseAbs().maxCoeff() == 0.0) throw InputError("POD of an all-zero snapshot matrix");
  const Eigen::Index m = x.rows(), n = x.cols();
  Eigen::MatrixXd u;
  Eigen::VectorXd s;
  if (m > n) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeThinU);
    u = Eigen::MatrixXd::Zero(m, n);
    u.topRows(n) = svd.matrixU();
    u.applyOnTheLeft(qr.householderQ());
    s = svd.singularValues();
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
    u = svd.matrixU();
    s = svd.singularValues();
  }
  const double s1 = s(0);
  int nonzero = 0;
  while (nonzero < s.size() && s(nonzero) > s1 * 1e-14 * std::max<double>(m, n)) ++nonzero;
  int rank = criterion.rank ? *criterion.rank : energy_rank(s, criterion.tolerance);
  if (rank < 1 || rank > nonzero)
    throw InputError("requested POD rank " + std::to_string(rank) + " but the snapshots have numerical rank " +
                     std::to_string(nonzero));
  PodBasis basis;
  basis.v = u.leftCols(rank);
  for (int c = 0; c < rank; ++c) {
    Eigen::Index imax;
    basis.v.col(c).cwiseAbs().maxCoeff(&imax);
    if (basis.v(imax, c) < 0) basis.v.col(c) *= -1.0;
  }
  basis.sigma_all = s / s1;
  basis.sigma = basis.sigma_all.head(rank);
  return basis;
}

PodBasis truncate(const PodBasis& basis, int n) {
  if (n < 1 || n > basis.rank()) throw InputError("cannot truncate a basis of rank " + std::to_string(basis.rank()) +
                                                  " to " + std::to_string(n));
  PodBasis out;
  out.v = basis.v.leftCols(n);
  out.sigma = basis.sigma.head(n);
  out.sigma_all = basis.sigma_all;
  return out;
}

}  // namespace homog2
