#pragma once

// Reduced bases from snapshot matrices by thin SVD.

#include <Eigen/Dense>

#include <optional>

namespace homog2 {

/// Either an energy tolerance or an explicit rank.
struct PodCriterion {
  double tolerance = 1e-4;
  std::optional<int> rank;

  static PodCriterion energy(double tol) { return {tol, std::nullopt}; }
  static PodCriterion fixed(int n) { return {0.0, n}; }
};

struct PodBasis {
  Eigen::MatrixXd v;            // orthonormal columns
  Eigen::VectorXd sigma;        // normalized singular values of the kept modes
  Eigen::VectorXd sigma_all;    // normalized singular values of the full spectrum

  int rank() const { return static_cast<int>(v.cols()); }
  Eigen::VectorXd project(const Eigen::VectorXd& x) const { return v.transpose() * x; }
  Eigen::VectorXd reconstruct(const Eigen::VectorXd& a) const { return v * a; }
};

/// Smallest n with 1 - sum_{i<=n} s_i^2 / sum s_i^2 < tol.
int energy_rank(const Eigen::VectorXd& sigma, double tol);

/// Throws InputError for an empty or all-zero matrix, or a rank above the
/// number of nonzero singular values.
PodBasis compute_basis(const Eigen::MatrixXd& snapshots, const PodCriterion& criterion);

/// Truncates a basis to its first n modes.
PodBasis truncate(const PodBasis& basis, int n);

}  // namespace homog2
