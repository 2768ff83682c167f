#pragma once

// Hyperreduced micro model: Galerkin projection onto the w-basis, integrated
// with the selected points and weights.

#include "homog2/cubature.hpp"
#include "homog2/micro.hpp"
#include "homog2/pod.hpp"

#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace homog2 {

struct RomArtifact {
  std::string mesh_json;  // the parent mesh file, embedded
  double zeta_parent = kParentZeta;
  MaterialParams params;
  PodBasis w, y, yh;
  CubatureScheme scheme;
  std::string provenance = "{}";  // JSON object: config hash, tolerances

  /// Header and blocks exactly as written to disk.
  std::string serialize() const;
  static RomArtifact deserialize(const std::string& bytes);
};

void write_artifact(const std::filesystem::path& path, const RomArtifact& artifact);
RomArtifact read_artifact(const std::filesystem::path& path);

struct RomOptions {
  double newton_tol = 0.0;  // 0 selects 1e-8 C1
  int max_iterations = 25;
  int max_cuts = 6;
  double min_jdet = 0.05;
  bool full_quadrature = false;  // every Gauss point with its exact weight
  bool rigid_guard = false;      // add the projected rigid-body rows if K is singular
  bool stability = true;         // leave unstable equilibria for a lower-energy neighbour
};

struct RomState {
  Eigen::VectorXd a;
  MacroInput input;
  bool converged = false;
  bool constrained = false;  // rigid-body rows active
  Eigen::Vector2d mult = Eigen::Vector2d::Zero();
  int newton_iterations = 0;
  int total_iterations = 0;
  int step_cuts = 0;
  double t_reached = 0.0;
  std::string message;
  double min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  int branch_switches = 0;
  PointCache points;  // at the integration points in use
};

class RomModel {
 public:
  /// Geometry data at the integration points for one zeta.
  struct Geometry {
    double zeta = 0.0;
    double v_norm = 0.0;  // integral of jdet with full quadrature
    std::vector<Mat2> f_mu_inv;
    Eigen::VectorXd jdet;
    Eigen::Matrix2Xd x_mu;
    std::vector<Eigen::MatrixXd> b;  // 4 x N mapped mode gradients
    Eigen::MatrixXd rigid;           // 2 x N projected rigid-body rows
  };

  RomModel(std::shared_ptr<const Mesh> mesh, const PodBasis& w, const CubatureScheme& scheme,
           const MaterialParams& params, const RomOptions& opts = {});
  static RomModel from_artifact(const RomArtifact& artifact, const RomOptions& opts = {});
  static std::shared_ptr<RomModel> shared_from_artifact(const RomArtifact& artifact, const RomOptions& opts = {});

  int size() const { return static_cast<int>(vw_.cols()); }
  int num_points() const { return static_cast<int>(points_.size()); }
  const std::vector<int>& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return h_; }
  const Eigen::MatrixXd& basis() const { return vw_; }
  const Mesh& mesh() const { return *mesh_; }
  const MaterialParams& params() const { return params_; }
  const RomOptions& options() const { return opts_; }
  double newton_tol() const;

  /// Cached per zeta; safe to call concurrently.
  std::shared_ptr<const Geometry> geometry(double zeta) const;

  /// Reduced internal force and stiffness at coefficients a. Throws InadmissibleState.
  void assemble(const Eigen::VectorXd& a, const MacroInput& input, Eigen::VectorXd& f, Eigen::MatrixXd* k,
                PointCache* cache = nullptr) const;

  RomState solve(const MacroInput& input, int loadsteps = 20) const;
  RomState solve_from(const RomState& start, const MacroInput& input, int loadsteps = 1) const;

  std::pair<Mat2, Vec8> effective_stress(const RomState& state) const;
  EffectiveResponse effective(const RomState& state) const;

  Eigen::VectorXd reconstruct(const RomState& state) const { return vw_ * state.a; }

  /// Stored energy with the reduced quadrature.
  double energy(const Eigen::VectorXd& a, const MacroInput& input) const;

 private:
  bool newton(RomState& state, const MacroInput& input, const Geometry& geo) const;
  void stabilize(RomState& state, const Geometry& geo) const;
  RomState continuation(RomState cur, const MacroInput& target, int nsteps) const;
  Eigen::MatrixXd solve_linear(const Eigen::MatrixXd& k, const Eigen::MatrixXd& rhs, const Geometry& geo,
                               bool constrained, Eigen::MatrixXd* mult = nullptr) const;

  std::shared_ptr<const Mesh> mesh_;
  QuadratureCache qc_;
  Eigen::MatrixXd vw_;
  std::vector<int> points_;
  Eigen::VectorXd h_;
  std::vector<Eigen::MatrixXd> grad_;  // 4 x N parent gradients at the points
  MaterialParams params_;
  RomOptions opts_;
  mutable std::mutex mutex_;
  mutable std::map<long long, std::shared_ptr<const Geometry>> geometry_;
};

}  // namespace homog2
