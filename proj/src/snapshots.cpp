#include "homog2/snapshots.hpp"

#include "homog2/errors.hpp"
#include "homog2/io.hpp"
#include "homog2/parallel.hpp"

#include <json.hpp>

#include <cmath>
#include <random>
#include <sstream>

namespace homog2 {

using nlohmann::json;

ParamBounds ParamBounds::table1() {
  ParamBounds b;
  b.f_lo << -0.1, -0.1, -0.1, -0.1;
  b.f_hi << 0.02, 0.1, 0.1, 0.02;
  b.g_lo.setConstant(-0.05);
  b.g_hi.setConstant(0.05);
  return b;
}

void ParamBounds::validate() const {
  if (!(f_lo.array() <= f_hi.array()).all() || !(g_lo.array() <= g_hi.array()).all())
    throw InputError("sampling bounds must satisfy lower <= upper");
  if (!f_lo.allFinite() || !f_hi.allFinite() || !g_lo.allFinite() || !g_hi.allFinite())
    throw InputError("sampling bounds must be finite");
}

int SamplingPlan::n_samples() const {
  int n = 0;
  for (const auto& g : groups) n += g.count;
  return n;
}

void SamplingPlan::validate() const {
  bounds.validate();
  if (loadsteps < 1) throw InputError("loadsteps must be positive");
  for (const auto& g : groups)
    if (g.count < 0) throw InputError("zeta group sizes must be non-negative");
}

SamplingPlan SamplingPlan::paper(int per_group, std::uint64_t seed) {
  SamplingPlan plan;
  for (double z : {-0.05, -0.025, 0.0, 0.025, 0.05}) plan.groups.push_back({z, per_group});
  plan.seed = seed;
  return plan;
}

std::vector<MacroInput> sample_parameters(const SamplingPlan& plan) {
  plan.validate();
  std::mt19937_64 rng(plan.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<MacroInput> out;
  out.reserve(plan.n_samples());
  for (const auto& group : plan.groups)
    for (int s = 0; s < group.count; ++s) {
      MacroInput in;
      Vec4 f;
      for (int c = 0; c < 4; ++c) f(c) = plan.bounds.f_lo(c) + unit(rng) * (plan.bounds.f_hi(c) - plan.bounds.f_lo(c));
      for (int c = 0; c < 6; ++c)
        in.gbar(c) = plan.bounds.g_lo(c) + unit(rng) * (plan.bounds.g_hi(c) - plan.bounds.g_lo(c));
      in.fbar = Mat2::Identity() + unflatten(f);
      in.zeta = group.zeta;
      out.push_back(in);
    }
  return out;
}

void SnapshotSet::append(const SnapshotSet& other) {
  if (other.cols() == 0) return;
  if (cols() == 0) {
    *this = other;
    return;
  }
  if (other.w.rows() != w.rows() || other.y.rows() != y.rows() || other.yh.rows() != yh.rows())
    throw InputError("snapshot sets have different row counts");
  const Eigen::Index c0 = cols();
  auto grow = [&](Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    a.conservativeResize(Eigen::NoChange, c0 + b.cols());
    a.rightCols(b.cols()) = b;
  };
  grow(w, other.w);
  grow(y, other.y);
  grow(yh, other.yh);
  meta.insert(meta.end(), other.meta.begin(), other.meta.end());
}

MicroModelCache::MicroModelCache(std::shared_ptr<const Mesh> mesh, const MaterialParams& params,
                                 const MicroOptions& opts)
    : mesh_(std::move(mesh)), params_(params), opts_(opts) {}

std::shared_ptr<const MicroModel> MicroModelCache::get(double zeta) const {
  const long long key = std::llround(zeta * 1e12);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = models_.find(key); it != models_.end()) return it->second;
  }
  auto model = std::make_shared<const MicroModel>(mesh_, zeta, params_, opts_);
  std::lock_guard<std::mutex> lock(mutex_);
  return models_.emplace(key, std::move(model)).first->second;
}

namespace {

struct Columns {
  std::vector<Eigen::VectorXd> w, y, yh;
  std::vector<SnapshotMeta> meta;
  std::string failure;
};

void record(const MicroModel& model, const MicroSolution& sol, SnapshotMeta meta, Columns& out) {
  out.w.push_back(sol.w);
  out.y.push_back(model.weighted_stress(sol));
  out.yh.push_back(model.weighted_moment(sol));
  out.meta.push_back(meta);
}

SnapshotSet merge(const std::vector<Columns>& parts, int dofs, int nq) {
  int total = 0;
  for (const auto& p : parts) total += static_cast<int>(p.meta.size());
  SnapshotSet set;
  set.w.resize(dofs, total);
  set.y.resize(4 * nq, total);
  set.yh.resize(8 * nq, total);
  int c = 0;
  for (const auto& p : parts)
    for (std::size_t k = 0; k < p.meta.size(); ++k, ++c) {
      set.w.col(c) = p.w[k];
      set.y.col(c) = p.y[k];
      set.yh.col(c) = p.yh[k];
      set.meta.push_back(p.meta[k]);
    }
  return set;
}

bool is_identity(const MacroInput& in) { return in.fbar == Mat2::Identity() && in.gbar.isZero(0.0); }

}  // namespace

SnapshotSet generate_snapshots(const MicroModelCache& models, const std::vector<MacroInput>& inputs, int loadsteps,
                               GenerationReport* report, int threads) {
  if (loadsteps < 1) throw InputError("loadsteps must be positive");
  std::vector<Columns> parts(inputs.size());
  parallel_for(static_cast<int>(inputs.size()), threads, [&](int s) {
    const auto model = models.get(inputs[s].zeta);
    Columns& out = parts[s];
    int step = 0;
    auto on_step = [&](const MicroSolution& sol, double t) {
      ++step;
      record(*model, sol, {s, step, t, inputs[s].zeta}, out);
    };
    MicroSolution sol;
    try {
      sol = model->solve(inputs[s], loadsteps, on_step);
    } catch (const SolverError& e) {
      sol.converged = false;
      sol.message = e.what();
    }
    if (!sol.converged) {
      std::ostringstream msg;
      msg << "sample " << s << " (zeta " << inputs[s].zeta << "): " << sol.message;
      out = Columns{};
      out.failure = msg.str();
    }
  });
  GenerationReport local;
  local.attempted = static_cast<int>(inputs.size());
  for (const auto& p : parts)
    if (!p.failure.empty()) {
      ++local.failed;
      local.failures.push_back(p.failure);
    }
  if (report) *report = local;
  return merge(parts, models.mesh()->num_dofs(), models.mesh()->num_quad());
}

SnapshotSet generate_trajectory_snapshots(const MicroModelCache& models, const std::vector<Trajectory>& trajectories,
                                          GenerationReport* report, int threads) {
  std::vector<Columns> parts(trajectories.size());
  parallel_for(static_cast<int>(trajectories.size()), threads, [&](int s) {
    const Trajectory& traj = trajectories[s];
    const auto model = models.get(traj.zeta);
    Columns& out = parts[s];
    MacroInput identity;
    identity.zeta = traj.zeta;
    MicroSolution cur = model->solve(identity, 1);
    const int n = static_cast<int>(traj.states.size());
    for (int k = 0; k < n; ++k) {
      MacroInput in = traj.states[k];
      in.zeta = traj.zeta;
      MicroSolution next;
      try {
        next = model->solve_from(cur, in, 1);
        if (!next.converged) next = model->solve_from(cur, in, 8);
      } catch (const SolverError& e) {
        next.converged = false;
        next.message = e.what();
      }
      if (!next.converged) {
        std::ostringstream msg;
        msg << "trajectory " << s << " (zeta " << traj.zeta << ") stopped at state " << k << ": " << next.message;
        out.failure = msg.str();
        return;
      }
      cur = std::move(next);
      if (!is_identity(in)) record(*model, cur, {s, k + 1, n > 1 ? double(k) / (n - 1) : 1.0, traj.zeta}, out);
    }
  });
  GenerationReport local;
  local.attempted = static_cast<int>(trajectories.size());
  for (const auto& p : parts)
    if (!p.failure.empty()) {
      ++local.failed;
      local.failures.push_back(p.failure);
    }
  if (report) *report = local;
  return merge(parts, models.mesh()->num_dofs(), models.mesh()->num_quad());
}

void write_snapshot_store(const std::filesystem::path& dir, const SnapshotSet& set, const std::string& config_hash,
                          const GenerationReport* report) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["config_hash"] = config_hash;
  manifest["columns"] = set.cols();
  manifest["rows"] = {{"w", set.w.rows()}, {"y", set.y.rows()}, {"yh", set.yh.rows()}};
  manifest["layout"] = "float64 little-endian, column-major";
  json meta = json::array();
  for (const auto& m : set.meta) meta.push_back({{"sample", m.sample}, {"step", m.step}, {"t", m.t}, {"zeta", m.zeta}});
  manifest["snapshots"] = std::move(meta);
  if (report) {
    manifest["attempted"] = report->attempted;
    manifest["failed"] = report->failed;
    manifest["failures"] = report->failures;
  }
  write_text(dir / "manifest.json", manifest.dump(1) + "\n");
  write_f64(dir / "w.f64", set.w);
  write_f64(dir / "y.f64", set.y);
  write_f64(dir / "yh.f64", set.yh);
}

SnapshotSet read_snapshot_store(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw InputError("snapshot manifest: " + std::string(e.what()));
  }
  try {
    if (manifest.at("schema_version").get<int>() != kSchemaVersion) throw InputError("unsupported snapshot schema version");
    SnapshotSet set;
    const int cols = manifest.at("columns").get<int>();
    const auto& rows = manifest.at("rows");
    for (const auto& m : manifest.at("snapshots"))
      set.meta.push_back({m.at("sample").get<int>(), m.at("step").get<int>(), m.at("t").get<double>(),
                          m.at("zeta").get<double>()});
    if (static_cast<int>(set.meta.size()) != cols) throw InputError("snapshot manifest column count mismatch");
    set.w = read_f64(dir / "w.f64", rows.at("w").get<Eigen::Index>(), cols);
    set.y = read_f64(dir / "y.f64", rows.at("y").get<Eigen::Index>(), cols);
    set.yh = read_f64(dir / "yh.f64", rows.at("yh").get<Eigen::Index>(), cols);
    return set;
  } catch (const json::exception& e) {
    throw InputError("snapshot manifest: " + std::string(e.what()));
  }
}

}  // namespace homog2
