#pragma once

// Mixed strain-gradient macro problem: displacement u (8-node quadrilaterals),
// relaxed deformation gradient Fhat (bilinear, corner nodes) and an
// element-constant multiplier L enforcing Fhat = I + grad u weakly.

#include "homog2/micro.hpp"
#include "homog2/rom.hpp"
#include "homog2/snapshots.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace homog2 {

struct MacroMesh {
  Eigen::Matrix2Xd nodes;                  // displacement nodes, mm
  std::vector<std::array<int, 8>> elements;  // 4 corners counter-clockwise, then mid-sides 01, 12, 23, 30
  std::vector<int> fnode;                  // displacement node -> Fhat node, -1 for mid-side nodes
  int num_fnodes = 0;
  std::vector<double> zeta;                // per element, mm

  int num_nodes() const { return static_cast<int>(nodes.cols()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  int num_quad() const { return 4 * num_elements(); }
  int num_dofs() const { return 2 * num_nodes() + 4 * num_fnodes + 4 * num_elements(); }
  int u_dof(int node, int comp) const { return 2 * node + comp; }
  int f_dof(int fn, int comp) const { return 2 * num_nodes() + 4 * fn + comp; }
  int l_dof(int element, int comp) const { return 2 * num_nodes() + 4 * num_fnodes + 4 * element + comp; }

  /// nx by ny elements on [0, width] x [0, height].
  static MacroMesh rectangle(double width, double height, int nx, int ny, double zeta);
  /// Throws InputError on inconsistent connectivity or non-positive Jacobians.
  void validate() const;
};

/// Constitutive law at one macro quadrature point with a persistent state.
class PointModel {
 public:
  virtual ~PointModel() = default;
  /// Response at `input`, continued from the latest trial state.
  virtual EffectiveResponse evaluate(const MacroInput& input) = 0;
  /// Accepts the latest trial state as converged.
  virtual void commit() = 0;
  /// Returns to the last committed state.
  virtual void revert() = 0;
  /// Linear solves spent in the last evaluation (0 if not applicable).
  virtual int last_iterations() const { return 0; }
};

using PointFactory = std::function<std::unique_ptr<PointModel>(double zeta)>;

PointFactory full_micro_factory(std::shared_ptr<const MicroModelCache> models);
PointFactory rom_factory(std::shared_ptr<const RomModel> rom);
/// Mooney-Rivlin stress of Fbar and a linear higher-order stress
/// Q = k (C1 + C2) Sym(G), with k in mm^2.
PointFactory surrogate_factory(const MaterialParams& params, double k);

struct MacroBC {
  struct Fixed {
    int dof;
    double value;  // at load parameter 0
    double rate;   // change per unit load parameter
  };
  std::vector<Fixed> fixed;
  std::vector<int> reaction_dofs;    // summed (negated) for the reported force
  std::optional<std::pair<int, double>> perturbation;  // dof, force during the first step
};

struct CurvePoint {
  int step = 0;
  double load = 0.0;      // load parameter (prescribed displacement, mm)
  double reaction = 0.0;  // N/mm
  int iterations = 0;
};

struct MacroOptions {
  int steps = 40;
  int max_cuts = 8;
  int max_iterations = 20;
  double rel_tol = 1e-8;
  double abs_tol = 0.0;  // 0 selects 1e-10 C1 times the mesh area
  int threads = 1;
  bool record_trajectories = false;
  bool record_fields = false;
  std::function<void(const CurvePoint&)> on_step;  // called after each converged step
};

struct MacroState {
  Eigen::VectorXd x;  // u, Fhat, L
};

struct MacroResult {
  std::vector<CurvePoint> curve;
  bool completed = false;
  std::string message;
  double constraint_gap = 0.0;   // largest |R_L| over converged steps
  std::vector<std::vector<MacroInput>> trajectories;  // [point][step]
  std::vector<Eigen::VectorXd> fields;               // converged x per step
  MacroState final_state;
  int cuts = 0;
};

/// Residual, optional tangent and quadrature-point inputs of the mixed form.
class MacroProblem {
 public:
  MacroProblem(MacroMesh mesh, MacroBC bc, PointFactory factory, MacroOptions opts = {});

  const MacroMesh& mesh() const { return mesh_; }
  const MacroBC& bc() const { return bc_; }
  const MacroOptions& options() const { return opts_; }

  /// Initial state u = 0, Fhat = I, L = 0.
  Eigen::VectorXd initial_state() const;

  /// Macro inputs (Fbar from u, symmetrized Ghat from Fhat) at every point.
  std::vector<MacroInput> point_inputs(const Eigen::VectorXd& x) const;

  /// Internal residual given responses at every point, and the tangent when k
  /// is non-null.
  void assemble(const Eigen::VectorXd& x, const std::vector<EffectiveResponse>& resp, Eigen::VectorXd& r,
                Eigen::MatrixXd* k) const;

  /// Evaluates every point model at x (trial states advance).
  std::vector<EffectiveResponse> evaluate(const Eigen::VectorXd& x);

  void commit();
  void revert();

  /// Incremental loading to `load_max` of the load parameter.
  MacroResult run(double load_max);

 private:
  struct Point {
    int element;
    Eigen::Matrix<double, 8, 2> dn;  // displacement shape gradients
    Eigen::Vector4d m;               // Fhat shape values
    Eigen::Matrix<double, 4, 2> dm;  // Fhat shape gradients
    double weight;                   // Gauss weight times Jacobian
  };

  bool solve_step(Eigen::VectorXd& x, double load, bool perturb, int& iterations, std::string& why);

  MacroMesh mesh_;
  MacroBC bc_;
  PointFactory factory_;
  MacroOptions opts_;
  std::vector<Point> points_;
  std::vector<std::unique_ptr<PointModel>> models_;
  std::vector<int> free_;
  std::vector<bool> is_fixed_;
};

struct PlateSpec {
  double width = 6.0;
  double height = 20.0;
  int nx = 2;
  int ny = 4;
  double zeta = -0.035;
  double strain = 0.075;
  bool perturb = false;
};

/// Uniaxial compression of a plate: bottom fixed, top pushed down with
/// u_x = 0, Fhat_xx = 1 and Fhat_yx = 0 on top and bottom, Fhat = I at the
/// bottom-left corner.
std::pair<MacroMesh, MacroBC> plate_problem(const PlateSpec& spec);

/// Nominal displacement (load / height) against nominal force (reaction / width).
struct Curve {
  std::vector<double> strain;
  std::vector<double> force;
};

Curve nominal_curve(const MacroResult& result, double height, double width);

/// step, strain, force rows after a comment line with the schema version and
/// config hash.
std::string curve_csv(const MacroResult& result, double height, double width, const std::string& config_hash = "");
/// Skips comment lines. Throws InputError on malformed rows.
Curve parse_curve_csv(const std::string& text);

/// First point whose force exceeds both neighbours.
std::optional<std::size_t> first_peak(const Curve& curve);

struct CurveComparison {
  double max_gap = 0.0;       // largest |force difference| over the common strain range
  double peak_force = 0.0;    // largest force of the reference
  double relative_gap = 0.0;  // max_gap / peak_force
  std::optional<double> peak_strain_ref, peak_strain_other;
  double covered = 0.0;       // largest strain reached by both
};

/// Differences of `other` interpolated linearly at the reference strains.
CurveComparison compare_curves(const Curve& ref, const Curve& other);

/// Mesh JSON plus one raw float64 block of the converged fields per step.
void write_fields(const std::filesystem::path& dir, const MacroMesh& mesh, const MacroResult& result);

/// Trajectories for retraining: one per macro point with its element zeta.
std::vector<Trajectory> to_trajectories(const MacroMesh& mesh, const MacroResult& result);

}  // namespace homog2
