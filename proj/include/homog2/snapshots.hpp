#pragma once

// Training data: parameter sampling, load-path solves and the snapshot store.

#include "homog2/micro.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace homog2 {

/// Uniform sampling box for (F - I) and the six independent G components.
struct ParamBounds {
  Vec4 f_lo, f_hi;  // F - I, row-major xx, xy, yx, yy
  Vec6 g_lo, g_hi;  // 1/mm

  static ParamBounds table1();
  void validate() const;
};

struct ZetaGroup {
  double zeta = 0.0;
  int count = 0;
};

struct SamplingPlan {
  ParamBounds bounds = ParamBounds::table1();
  std::vector<ZetaGroup> groups;
  int loadsteps = 20;
  std::uint64_t seed = 1;

  int n_samples() const;
  void validate() const;
  /// Five zeta groups of `per_group` samples.
  static SamplingPlan paper(int per_group = 20, std::uint64_t seed = 1);
};

/// Draws are made in group order; within a sample F before G, each
/// component in storage order.
std::vector<MacroInput> sample_parameters(const SamplingPlan& plan);

struct SnapshotMeta {
  int sample = 0;
  int step = 0;
  double t = 0.0;
  double zeta = 0.0;
};

struct SnapshotSet {
  Eigen::MatrixXd w;   // dofs x cols
  Eigen::MatrixXd y;   // 4 Qhat x cols
  Eigen::MatrixXd yh;  // 8 Qhat x cols
  std::vector<SnapshotMeta> meta;

  int cols() const { return static_cast<int>(meta.size()); }
  /// Column-wise concatenation; empty sets adopt the other's row counts.
  void append(const SnapshotSet& other);
};

struct GenerationReport {
  int attempted = 0;
  int failed = 0;
  std::vector<std::string> failures;  // one line per skipped sample
};

/// Shared immutable micro models keyed by zeta, created on first use.
class MicroModelCache {
 public:
  MicroModelCache(std::shared_ptr<const Mesh> mesh, const MaterialParams& params, const MicroOptions& opts = {});
  std::shared_ptr<const MicroModel> get(double zeta) const;
  const MaterialParams& params() const { return params_; }
  std::shared_ptr<const Mesh> mesh() const { return mesh_; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  MaterialParams params_;
  MicroOptions opts_;
  mutable std::mutex mutex_;
  mutable std::map<long long, std::shared_ptr<const MicroModel>> models_;
};

/// One snapshot per converged load step t = k / loadsteps (k >= 1).
/// Diverging samples are skipped and reported.
SnapshotSet generate_snapshots(const MicroModelCache& models, const std::vector<MacroInput>& inputs, int loadsteps,
                               GenerationReport* report = nullptr, int threads = 1);

/// Sequence of macro states seen by one macro quadrature point.
struct Trajectory {
  double zeta = 0.0;
  std::vector<MacroInput> states;
};

/// Replays each trajectory with warm starts; stops a trajectory at its first
/// unrecoverable state. Identity states are not stored.
SnapshotSet generate_trajectory_snapshots(const MicroModelCache& models, const std::vector<Trajectory>& trajectories,
                                          GenerationReport* report = nullptr, int threads = 1);

/// Directory with manifest.json and w.f64, y.f64, yh.f64 (column-major).
void write_snapshot_store(const std::filesystem::path& dir, const SnapshotSet& set,
                          const std::string& config_hash = "", const GenerationReport* report = nullptr);
SnapshotSet read_snapshot_store(const std::filesystem::path& dir);

}  // namespace homog2
