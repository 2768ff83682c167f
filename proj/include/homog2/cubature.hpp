#pragma once

// Sparse quadrature selection: weighted non-negative least squares over the
// full set of Gauss points, columns added greedily.

#include "homog2/mesh.hpp"
#include "homog2/pod.hpp"

#include <array>
#include <string>
#include <vector>

namespace homog2 {

struct NnlsResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = true;
  double kkt = 0.0;  // relative KKT residual
};

/// min ||A x - b|| subject to x >= 0 (Lawson-Hanson active set). `x0` warm
/// starts the passive set with its positive entries.
NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd* x0 = nullptr,
                double tol = 1e-12, int max_iterations = 0);

/// max(|g_j| for x_j > 0, max(-g_j, 0) for x_j = 0) relative to ||A^T b||inf,
/// with g = A^T (A x - b).
double nnls_kkt_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x);

struct CubatureConfig {
  std::array<double, 4> eps{1e-4, 1e-4, 1e-4, 1e-4};
  std::array<double, 3> c{10.0, 1.6, 1.1};
  int k_max = 0;  // 0 selects half the number of Gauss points
};

struct CubatureSystem {
  Eigen::MatrixXd a_hat;        // recentered rows: N M, 4 M, 8 L, 1
  Eigen::VectorXd b_hat;        // zeros, then the volume
  Eigen::VectorXd sigma;        // block weights without the c factors
  Eigen::VectorXd h_full;       // Gauss weights of the parent mesh
  std::array<int, 5> block{};   // row offsets of the four blocks and the total
  double volume = 0.0;

  int rows() const { return static_cast<int>(a_hat.rows()); }
  int cols() const { return static_cast<int>(a_hat.cols()); }
};

/// Parent-domain gradients of every w-mode at quadrature point q, as a 4 x N
/// matrix with rows vec(dv/dx) (index 2 i + j for dv_i/dx_j).
Eigen::MatrixXd mode_gradients(const Mesh& mesh, const QuadratureCache& qc, const Eigen::MatrixXd& vw, int q);

CubatureSystem build_cubature_system(const Mesh& mesh, const QuadratureCache& qc, const PodBasis& w,
                                     const PodBasis& y, const PodBasis& yh);

struct CubatureStep {
  int q = 0;
  std::array<double, 4> r{};
  double total = 0.0;  // weighted residual norm after the NNLS
};

struct CubatureScheme {
  std::vector<int> indices;
  Eigen::VectorXd weights;
  std::vector<CubatureStep> history;
  CubatureConfig config;
  bool converged = false;
  double nnls_kkt = 0.0;

  int size() const { return static_cast<int>(indices.size()); }
};

/// Square roots of the diagonal weights including the c factors.
Eigen::VectorXd row_scale(const CubatureSystem& sys, const CubatureConfig& cfg);

/// Standardized block residuals of a candidate scheme.
std::array<double, 4> cubature_residuals(const CubatureSystem& sys, const std::vector<int>& indices,
                                         const Eigen::VectorXd& weights);

/// Sigma-weighted total residual including the c factors.
double weighted_residual(const CubatureSystem& sys, const CubatureConfig& cfg, const std::vector<int>& indices,
                         const Eigen::VectorXd& weights);

CubatureScheme select_points(const CubatureSystem& sys, const CubatureConfig& cfg);

/// iteration, Q, r1..r4 with 17 significant digits.
std::string residual_csv(const CubatureScheme& scheme);

}  // namespace homog2
