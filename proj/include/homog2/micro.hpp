#pragma once

// Full-order micro problem on the parent RVE domain.

#include "homog2/material.hpp"
#include "homog2/mesh.hpp"
#include "homog2/saddle.hpp"
#include "homog2/spline.hpp"
#include "homog2/transform.hpp"

#include <Eigen/SparseCholesky>

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace homog2 {

struct MacroInput {
  Mat2 fbar = Mat2::Identity();
  Vec6 gbar = Vec6::Zero();  // independent components, 1/mm
  double zeta = kParentZeta;
};

/// Point on the straight load path from `a` (s = 0) to `b` (s = 1).
MacroInput interpolate(const MacroInput& a, const MacroInput& b, double s);

struct EffectiveResponse {
  Mat2 pbar = Mat2::Zero();
  Vec8 qbar = Vec8::Zero();  // full-slot, index 4 i + 2 j + k
  Mat4 dp_df = Mat4::Zero();
  Mat46 dp_dg = Mat46::Zero();  // columns: independent gradient components
  Mat84 dq_df = Mat84::Zero();
  Mat86 dq_dg = Mat86::Zero();
};

struct MicroOptions {
  double newton_tol = 0.0;  // 0 selects 1e-8 C1 (per mm)
  int max_iterations = 25;
  int max_cuts = 6;
  double min_jdet = 0.05;
  bool stability = true;  // leave unstable equilibria for a lower-energy neighbour
};

/// Per quadrature point F, P and A at a state.
struct PointCache {
  std::vector<Mat2> f;
  std::vector<Mat2> p;
  std::vector<Mat4> a;
};

struct MicroSolution {
  Eigen::VectorXd w;
  Eigen::VectorXd m;
  MacroInput input;
  bool converged = false;
  int newton_iterations = 0;  // linear solves in the last load step
  int total_iterations = 0;
  int step_cuts = 0;
  double t_reached = 0.0;
  std::vector<double> residuals;  // residual history of the last load step
  std::string message;
  double min_eigenvalue = std::numeric_limits<double>::quiet_NaN();  // of K on ker C, when checked
  int branch_switches = 0;

  PointCache points;

  std::shared_ptr<SaddleSolver> factor;  // at the converged state, built on demand
};

/// Immutable per-zeta micro model: geometry, map, constraints, material.
/// All const member functions are safe to call concurrently.
class MicroModel {
 public:
  MicroModel(std::shared_ptr<const Mesh> mesh, double zeta, const MaterialParams& params,
             const MicroOptions& opts = {});
  /// Model on a mesh taken as the physical configuration (identity map).
  static MicroModel physical(std::shared_ptr<const Mesh> mesh, const MaterialParams& params,
                             const MicroOptions& opts = {});

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  const QuadratureCache& quadrature() const { return qc_; }
  const TransformationMap& map() const { return map_; }
  const ConstraintSet& constraints() const { return constraints_; }
  const MaterialParams& params() const { return params_; }
  const MicroOptions& options() const { return opts_; }
  double zeta() const { return map_.zeta; }
  double volume() const { return map_.volume; }
  double newton_tol() const;
  int num_dofs() const { return mesh_->num_dofs(); }
  int num_quad() const { return qc_.size(); }

  /// Mapped shape gradients F_mu^-T grad N (rows per node) and weights w jdet.
  const Tri6Grads& mapped_grad(int q) const { return grad_[q]; }
  double weight(int q) const { return wq_(q); }
  const Eigen::VectorXd& weights() const { return wq_; }

  /// Deformation gradient at q for nodal fluctuation w.
  Mat2 deformation(const Eigen::VectorXd& w, const Mat2& fbar, const Vec8& g8, int q) const;

  /// Internal force and tangent stiffness. Throws InadmissibleState.
  void assemble(const Eigen::VectorXd& w, const MacroInput& input, Eigen::VectorXd& f, SpMat* k,
                PointCache* cache = nullptr) const;

  /// Residual norm with least-squares multipliers, and those multipliers.
  double constrained_residual(const Eigen::VectorXd& f, Eigen::VectorXd* m = nullptr) const;

  using StepCallback = std::function<void(const MicroSolution&, double t)>;

  /// Loads from the stress-free state along (I + t (F - I), t G).
  MicroSolution solve(const MacroInput& input, int loadsteps = 20, const StepCallback& on_step = {}) const;

  /// Continues from a converged solution to a new input.
  MicroSolution solve_from(const MicroSolution& start, const MacroInput& input, int loadsteps = 1,
                           const StepCallback& on_step = {}) const;

  std::pair<Mat2, Vec8> effective_stress(const MicroSolution& sol) const;
  /// Effective stress from the weighted stress P F_mu^-T jdet.
  Mat2 effective_stress_weighted(const MicroSolution& sol) const;
  EffectiveResponse effective_tangents(MicroSolution& sol) const;

  /// Weighted stress Y (4 per point) and weighted moment (8 per point),
  /// element-major, point-minor.
  Eigen::VectorXd weighted_stress(const MicroSolution& sol) const;
  Eigen::VectorXd weighted_moment(const MicroSolution& sol) const;

  /// Stored energy of the micro state.
  double energy(const Eigen::VectorXd& w, const MacroInput& input) const;

  /// Smallest eigenvalue of K restricted to ker C and its eigenvector, by
  /// shifted inverse iteration.
  std::pair<double, Eigen::VectorXd> lowest_mode(const MicroSolution& sol) const;

 private:
  MicroModel(std::shared_ptr<const Mesh> mesh, QuadratureCache qc, TransformationMap map,
             const MaterialParams& params, const MicroOptions& opts);
  void finish_setup();
  bool newton(MicroSolution& sol, const MacroInput& input, SaddleSolver& solver) const;
  MicroSolution continuation(MicroSolution start, const MacroInput& target, int nsteps,
                             const StepCallback& on_step) const;
  void stabilize(MicroSolution& sol, SaddleSolver& solver) const;
  std::unique_ptr<SaddleSolver> make_solver() const;

  std::shared_ptr<const Mesh> mesh_;
  QuadratureCache qc_;
  TransformationMap map_;
  MaterialParams params_;
  MicroOptions opts_;
  ConstraintSet constraints_;
  std::vector<Tri6Grads> grad_;
  Eigen::VectorXd wq_;
  std::shared_ptr<const Eigen::SimplicialLDLT<SpMat>> cct_;
};

/// Nodal field rotating neighbouring ligament junctions in opposite senses;
/// orients buckling modes so that every solver picks the same branch.
Eigen::VectorXd pattern_reference(const Mesh& mesh);

/// Constraint rows: periodic pairs, top and right edge integrals, and the
/// jdet-weighted mean of the fluctuation.
ConstraintSet build_constraints(const Mesh& mesh, const QuadratureCache& qc, const TransformationMap& map);

}  // namespace homog2
