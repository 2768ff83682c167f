#pragma once

// Constrained linear systems
//   [ K  C^T ] [ x ]   [ r ]
//   [ C  0   ] [ m ] = [ s ]
// factorized once and reused for several right-hand sides. Sparse rows of C
// enter the LU factorization; dense rows (whole-domain integrals) are
// eliminated through a small Schur complement to avoid fill-in.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

namespace homog2 {

using SpMat = Eigen::SparseMatrix<double>;

enum class ConstraintKind { PbcPair, TopIntegral, RightIntegral, RigidBody };

const char* to_string(ConstraintKind kind);

struct ConstraintSet {
  SpMat c;
  std::vector<ConstraintKind> kind;  // one label per row

  int rows() const { return static_cast<int>(c.rows()); }
  int cols() const { return static_cast<int>(c.cols()); }
};

/// Throws SolverError naming the provenance of linearly dependent rows.
void check_constraint_rank(const ConstraintSet& cs, double tol = 1e-10);

class SaddleSolver {
 public:
  /// `scale` sets the magnitude of constraint rows inside the factorized
  /// matrix (a stiffness scale keeps the system well conditioned).
  SaddleSolver(const SpMat& c, double scale);

  /// Factorizes with K; the symbolic analysis is kept while the sparsity
  /// pattern of K does not change. Throws SolverError on failure.
  void factorize(const SpMat& k);
  bool factorized() const { return factorized_; }

  /// Solves for several right-hand sides. rhs_x: n x k, rhs_m: nc x k
  /// (empty means zero). Outputs are in unscaled units.
  void solve(const Eigen::MatrixXd& rhs_x, const Eigen::MatrixXd& rhs_m, Eigen::MatrixXd& x,
             Eigen::MatrixXd& m) const;

  int size() const { return n_; }
  int num_constraints() const { return nc_; }

 private:
  Eigen::MatrixXd solve_bordered(const Eigen::MatrixXd& rhs) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& sol) const;

  int n_ = 0;
  int nc_ = 0;
  std::vector<int> sparse_rows_;
  std::vector<int> dense_rows_;
  SpMat c_sparse_;   // scaled
  Eigen::MatrixXd d_dense_;  // scaled, dense_rows x n
  Eigen::VectorXd row_factor_;  // scaled row = row_factor * original row
  SpMat kkt_;
  Eigen::MatrixXd border_;  // S^-1 [D^T; 0]
  Eigen::FullPivLU<Eigen::MatrixXd> schur_;
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
  bool factorized_ = false;
  Eigen::Index pattern_nnz_ = -1;
};

struct SaddleSystem {
  SpMat k;
  SpMat c;
  Eigen::VectorXd f;  // internal force; the system solved has right-hand side -f
};

struct SaddleResult {
  Eigen::VectorXd dw;
  Eigen::VectorXd m;
};

SaddleResult solve_saddle(const SaddleSystem& system);

}  // namespace homog2
