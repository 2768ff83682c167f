// Acceptance runner: one PASS/FAIL line per criterion.

#include "homog2/checks.hpp"
#include "homog2/fixtures.hpp"
#include "homog2/io.hpp"
#include "homog2/macro.hpp"
#include "homog2/rom.hpp"
#include "homog2/training.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace homog2;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string summary;
};

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

double rel(const auto& a, const auto& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

class Workdir {
 public:
  explicit Workdir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  std::shared_ptr<const Mesh> coarse() const { return mesh("rve_coarse.json"); }
  std::shared_ptr<const Mesh> parent() const { return mesh("rve_parent.json"); }

  /// Snapshots of the full sampling plan in ten load steps, stored once.
  SnapshotSet plan_snapshots(const std::string& mesh_name) const {
    const fs::path store = dir_ / ("plan_" + fs::path(mesh_name).stem().string());
    if (fs::exists(store / "manifest.json")) return read_snapshot_store(store);
    const MicroModelCache models(mesh(mesh_name), MaterialParams{});
    const auto t0 = Clock::now();
    const SnapshotSet set = generate_snapshots(models, sample_parameters(SamplingPlan::paper()), 10);
    write_snapshot_store(store, set);
    std::cerr << "  sampled " << set.cols() << " snapshots on " << mesh_name << " in " << since(t0) << " s\n";
    return set;
  }

  TrainingResult train(const std::string& mesh_name, const SnapshotSet& set, const TrainingSettings& ts = {}) const {
    return train_rom(read_text(fixture_path(mesh_name)), set, ts);
  }

  const fs::path& dir() const { return dir_; }

 private:
  std::shared_ptr<const Mesh> mesh(const std::string& name) const {
    return std::make_shared<const Mesh>(load_mesh(fixture_path(name)));
  }
  fs::path dir_;
};

Outcome from_check(const CheckResult& c) {
  std::ostringstream s;
  s << c.name << " " << sci(c.value) << " (limit " << sci(c.limit) << ")";
  if (!c.detail.empty()) s << "; " << c.detail;
  return {c.pass, s.str()};
}

/// One Table-1 state per listed zeta group, full load.
std::vector<MacroInput> table_states(std::vector<int> groups, std::uint64_t seed) {
  const auto all = sample_parameters(SamplingPlan::paper(1, seed));
  std::vector<MacroInput> out;
  for (int g : groups) out.push_back(all.at(g));
  return out;
}

Outcome criterion1(const Workdir& w) {
  return from_check(check_stress_free(w.parent(), {-0.05, -0.025, 0.0, 0.025, 0.05}, MaterialParams{}));
}

Outcome criterion2(const Workdir&) { return from_check(check_material(MaterialParams{}, MaterialParams{}, 10, 2)); }

Outcome criterion3(const Workdir& w) {
  return from_check(check_effective_tangents(w.coarse(), table_states({0, 2, 4}, 31), MaterialParams{}));
}

Outcome criterion4(const Workdir& w) {
  MacroInput in = table_states({0}, 41).front();
  return from_check(check_pullback(w.coarse(), in, MaterialParams{}));
}

Outcome criterion5(const Workdir& w) {
  return from_check(check_weighted_stress(w.coarse(), table_states({0, 1, 2, 3, 4}, 51), MaterialParams{}));
}

Outcome criterion6(const Workdir& w) {
  const TrainingResult coarse = w.train("rve_coarse.json", w.plan_snapshots("rve_coarse.json"));
  bool pass = true;
  std::ostringstream s;
  for (const CheckResult& c : check_cubature(coarse.system, coarse.artifact.scheme)) {
    pass = pass && c.pass;
    s << c.name << " " << sci(c.value) << (c.pass ? "" : " FAIL") << "; ";
  }
  const TrainingResult parent = w.train("rve_parent.json", w.plan_snapshots("rve_parent.json"));
  const double ratio = static_cast<double>(parent.q()) / parent.system.cols();
  const bool small = parent.converged() && ratio <= 0.15;
  pass = pass && small;
  s << "parent Q " << parent.q() << " of " << parent.system.cols() << " = " << std::setprecision(3) << 100 * ratio
    << "% (limit 15%)";
  return {pass, s.str()};
}

Outcome criterion7(const Workdir& w) {
  const TrainingResult tr = w.train("rve_coarse.json", w.plan_snapshots("rve_coarse.json"));
  const RomModel rom = RomModel::from_artifact(tr.artifact);
  RomOptions full_opts;
  full_opts.full_quadrature = true;
  const RomModel pod = RomModel::from_artifact(tr.artifact, full_opts);
  const auto held = sample_parameters(SamplingPlan::paper(2, 99));
  double worst_p = 0.0, worst_f = 0.0;
  int failed = 0;
  for (const MacroInput& in : held) {
    const RomState a = rom.solve(in, 10), b = pod.solve(in, 10);
    if (!a.converged || !b.converged) {
      ++failed;
      continue;
    }
    worst_p = std::max(worst_p, rel(rom.effective_stress(a).first, pod.effective_stress(b).first));
    // reduced internal force at the fully integrated solution, relative to the force of the macro input alone
    Eigen::VectorXd fr, ff, f0;
    rom.assemble(b.a, in, fr, nullptr);
    pod.assemble(b.a, in, ff, nullptr);
    pod.assemble(Eigen::VectorXd::Zero(pod.size()), in, f0, nullptr);
    worst_f = std::max(worst_f, (fr - ff).norm() / f0.norm());
  }
  std::ostringstream s;
  s << held.size() << " held-out inputs, N " << tr.n() << " Q " << tr.q() << ": max P rel diff " << sci(worst_p)
    << ", max force rel diff " << sci(worst_f) << " (limit 1e-2)";
  if (failed) s << "; " << failed << " did not converge";
  return {failed == 0 && worst_p < 1e-2 && worst_f < 1e-2, s.str()};
}

struct PlateRun {
  Curve curve;
  MacroResult result;
  double seconds = 0.0;
};

PlateRun run_plate(const PlateSpec& spec, const PointFactory& factory, bool trajectories) {
  const auto [mesh, bc] = plate_problem(spec);
  MacroOptions opts;
  opts.record_trajectories = trajectories;
  opts.on_step = [&](const CurvePoint& p) {
    std::cerr << "  step " << p.step << " strain " << p.load / spec.height << " force " << p.reaction / spec.width
              << '\n';
  };
  const auto t0 = Clock::now();
  MacroProblem problem(mesh, bc, factory, opts);
  PlateRun run;
  run.result = problem.run(spec.strain * spec.height);
  run.seconds = since(t0);
  run.curve = nominal_curve(run.result, spec.height, spec.width);
  return run;
}

Outcome criterion8(const Workdir& w) {
  PlateSpec spec;
  spec.perturb = true;
  const auto coarse = w.coarse();
  const PlateRun full =
      run_plate(spec, full_micro_factory(std::make_shared<const MicroModelCache>(coarse, MaterialParams{})), true);
  write_text(w.dir() / "plate_full.csv", curve_csv(full.result, spec.height, spec.width, ""));
  if (!full.result.completed) return {false, "full run incomplete: " + full.result.message};

  const auto [mesh, bc] = plate_problem(spec);
  const MicroModelCache models(coarse, MaterialParams{});
  const SnapshotSet set = generate_trajectory_snapshots(models, to_trajectories(mesh, full.result));
  const TrainingResult tr = w.train("rve_coarse.json", set);
  const PlateRun red = run_plate(spec, rom_factory(RomModel::shared_from_artifact(tr.artifact)), false);
  write_text(w.dir() / "plate_rom.csv", curve_csv(red.result, spec.height, spec.width, ""));
  if (!red.result.completed) return {false, "ROM run incomplete: " + red.result.message};

  const CurveComparison c = compare_curves(full.curve, red.curve);
  const bool peaks = c.peak_strain_ref && c.peak_strain_other;
  const double shift = peaks ? std::abs(*c.peak_strain_other - *c.peak_strain_ref) / *c.peak_strain_ref : INFINITY;
  std::ostringstream s;
  s << "gap " << sci(c.relative_gap) << " of peak force (limit 2e-2); ";
  if (peaks)
    s << "peak strain " << *c.peak_strain_ref << " vs " << *c.peak_strain_other << ", shift " << sci(shift)
      << " (limit 5e-2); ";
  else
    s << "no peak in " << (c.peak_strain_ref ? "ROM" : "full") << " curve; ";
  s << "N " << tr.n() << " Q " << tr.q() << "; time full " << std::setprecision(4) << full.seconds
    << " s (limit 1800), ROM " << red.seconds << " s (limit 300)";
  const bool pass = c.relative_gap < 2e-2 && shift < 5e-2 && full.seconds < 1800 && red.seconds < 300;
  return {pass, s.str()};
}

Outcome criterion9(const Workdir& w) {
  const TrainingResult tr = w.train("rve_parent.json", w.plan_snapshots("rve_parent.json"));
  const RomModel rom = RomModel::from_artifact(tr.artifact);
  const MicroModelCache models(w.parent(), MaterialParams{});
  const auto inputs = table_states({0, 1, 2, 3, 4}, 91);
  double t_rom = 0.0, t_full = 0.0;
  for (const MacroInput& in : inputs) {
    const MicroModel& model = *models.get(in.zeta);
    rom.geometry(in.zeta);
    auto t0 = Clock::now();
    const RomState st = rom.solve(in, 10);
    if (st.converged) rom.effective(st);
    t_rom += since(t0);
    t0 = Clock::now();
    MicroSolution sol = model.solve(in, 10);
    if (sol.converged) model.effective_tangents(sol);
    t_full += since(t0);
    if (!st.converged || !sol.converged) return {false, "a solve did not converge"};
  }
  const double speedup = t_full / t_rom;
  std::ostringstream s;
  s << "parent mesh, N " << tr.n() << " Q " << tr.q() << ": full " << std::setprecision(3) << t_full << " s, ROM "
    << t_rom << " s, speedup " << speedup << " (limit 10)";
  return {speedup >= 10.0, s.str()};
}

Outcome criterion10(const Workdir& w) {
  const SnapshotSet set = w.plan_snapshots("rve_coarse.json");
  auto inputs = table_states({0, 2, 4}, 101);
  for (auto& in : inputs) in.zeta = -0.075;
  const MicroModel full(w.coarse(), -0.075, MaterialParams{});
  std::vector<Mat2> reference;
  for (const auto& in : inputs) {
    const MicroSolution sol = full.solve(in, 10);
    if (!sol.converged) return {false, "full micro solve at zeta -0.075 did not converge"};
    reference.push_back(full.effective_stress(sol).first);
  }
  std::ostringstream s;
  s << "zeta -0.075 mean P rel err:";
  std::vector<double> errors;
  for (int n : {48, 78, 112}) {
    TrainingSettings ts;
    ts.w = PodCriterion::fixed(n);
    const RomModel rom = RomModel::from_artifact(w.train("rve_coarse.json", set, ts).artifact);
    double sum = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const RomState st = rom.solve(inputs[i], 10);
      if (!st.converged) return {false, "ROM with N " + std::to_string(n) + " did not converge"};
      sum += rel(rom.effective_stress(st).first, reference[i]);
    }
    errors.push_back(sum / inputs.size());
    s << " N " << n << " " << sci(errors.back());
  }
  const bool monotone = errors[0] > errors[1] && errors[1] > errors[2];
  s << (monotone ? ", decreasing" : ", not decreasing");
  return {monotone, s.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  std::string workdir = "acceptance_work";
  app.add_option("--only", only, "run a single criterion")->check(CLI::Range(1, 10));
  app.add_option("--workdir", workdir, "directory for cached snapshot stores and curves");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome(const Workdir&)>> criteria = {
      criterion1, criterion2, criterion3, criterion4, criterion5,
      criterion6, criterion7, criterion8, criterion9, criterion10};
  const Workdir w(workdir);
  bool all = true;
  for (int n = 1; n <= 10; ++n) {
    if (only && n != only) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[n - 1](w);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.summary << "  ["
              << std::fixed << std::setprecision(1) << since(t0) << " s]" << std::defaultfloat << std::endl;
  }
  return all ? 0 : 1;
}
