#include "homog2/checks.hpp"
#include "homog2/config.hpp"
#include "homog2/errors.hpp"
#include "homog2/fixtures.hpp"
#include "homog2/io.hpp"
#include "homog2/macro.hpp"
#include "homog2/mesh.hpp"
#include "homog2/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <iostream>

using namespace homog2;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kSolver = 3;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int cmd_sample(const RunConfig& cfg) {
  const auto mesh = std::make_shared<const Mesh>(load_mesh(cfg.mesh));
  const MicroModelCache models(mesh, cfg.material);
  const auto inputs = sample_parameters(cfg.sampling);
  if (inputs.empty()) std::cerr << "warning: sampling plan has no samples; writing an empty store\n";
  GenerationReport report;
  const auto t0 = Clock::now();
  const SnapshotSet set = generate_snapshots(models, inputs, cfg.sampling.loadsteps, &report, cfg.threads);
  write_snapshot_store(cfg.store, set, cfg.hash, &report);
  int index = 0;
  for (const auto& g : cfg.sampling.groups) {
    int ok = 0;
    for (int s = 0; s < g.count; ++s, ++index)
      ok += std::any_of(set.meta.begin(), set.meta.end(), [&](const SnapshotMeta& m) { return m.sample == index; });
    std::cout << "zeta " << g.zeta << ": " << ok << " of " << g.count << " samples converged\n";
  }
  for (const auto& f : report.failures) std::cout << "  skipped: " << f << '\n';
  std::cout << "snapshots " << set.cols() << " written to " << cfg.store.string() << " in " << since(t0) << " s\n";
  if (!inputs.empty() && report.failed == report.attempted) {
    std::cerr << "error: every sample failed\n";
    return kSolver;
  }
  return kOk;
}

int cmd_train(const RunConfig& cfg) {
  const SnapshotSet set = read_snapshot_store(cfg.store);
  TrainingSettings ts;
  ts.w = cfg.pod_w;
  ts.y = cfg.pod_y;
  ts.yh = cfg.pod_yh;
  ts.cubature = cfg.cubature;
  ts.params = cfg.material;
  const auto t0 = Clock::now();
  nlohmann::json prov = {{"schema_version", kSchemaVersion}, {"config_hash", cfg.hash}, {"snapshots", set.cols()}};
  ts.provenance = prov.dump();
  TrainingResult res = train_rom(read_text(cfg.mesh), set, ts);
  prov["cubature_converged"] = res.converged();
  res.artifact.provenance = prov.dump();
  if (!cfg.artifact.parent_path().empty()) std::filesystem::create_directories(cfg.artifact.parent_path());
  write_artifact(cfg.artifact, res.artifact);
  const auto csv_path = std::filesystem::path(cfg.artifact.string() + ".residuals.csv");
  write_text(csv_path, "# schema_version " + std::to_string(kSchemaVersion) + ", config_hash " + cfg.hash + "\n" +
                           residual_csv(res.artifact.scheme));
  std::cout << "N " << res.n() << " M " << res.m() << " L " << res.l() << " Q " << res.q() << " of "
            << res.system.cols() << '\n';
  std::cout << "artifact " << cfg.artifact.string() << ", residuals " << csv_path.string() << ", " << since(t0)
            << " s\n";
  if (!res.converged()) {
    std::cerr << "error: cubature did not reach the tolerances within k_max; artifact flagged\n";
    return kSolver;
  }
  return kOk;
}

int cmd_macro(const RunConfig& cfg, const std::string& mode, const std::string& artifact) {
  const auto [mesh, bc] = plate_problem(cfg.plate);
  PointFactory factory;
  if (mode == "full") {
    auto rve = std::make_shared<const Mesh>(load_mesh(cfg.mesh));
    factory = full_micro_factory(std::make_shared<const MicroModelCache>(rve, cfg.material));
  } else {
    factory = rom_factory(RomModel::shared_from_artifact(read_artifact(artifact)));
  }
  MacroOptions opts = cfg.macro;
  opts.record_fields = true;
  opts.on_step = [&](const CurvePoint& p) {
    std::cout << "step " << p.step << "  strain " << p.load / cfg.plate.height << "  force "
              << p.reaction / cfg.plate.width << "  iterations " << p.iterations << std::endl;
  };
  const auto t0 = Clock::now();
  MacroProblem problem(mesh, bc, factory, opts);
  const MacroResult res = problem.run(cfg.plate.strain * cfg.plate.height);
  const double seconds = since(t0);
  std::filesystem::create_directories(cfg.output);
  const auto csv = cfg.output / ("curve_" + mode + ".csv");
  write_text(csv, curve_csv(res, cfg.plate.height, cfg.plate.width, cfg.hash));
  write_fields(cfg.output / ("fields_" + mode), mesh, res);
  const Curve curve = nominal_curve(res, cfg.plate.height, cfg.plate.width);
  if (auto p = first_peak(curve))
    std::cout << "peak force " << curve.force[*p] << " MPa at strain " << curve.strain[*p] << '\n';
  else
    std::cout << "no force peak; largest force " << *std::max_element(curve.force.begin(), curve.force.end())
              << " MPa\n";
  std::cout << "curve " << csv.string() << ", wall time " << seconds << " s\n";
  if (!res.completed) {
    std::cerr << "error: " << res.message << " (partial curve written)\n";
    return kSolver;
  }
  return kOk;
}

int cmd_compare(const std::string& ref, const std::string& other) {
  const CurveComparison c = compare_curves(parse_curve_csv(read_text(ref)), parse_curve_csv(read_text(other)));
  std::cout << "max force gap " << c.max_gap << " MPa (" << 100 * c.relative_gap << "% of peak " << c.peak_force
            << ") up to strain " << c.covered << '\n';
  const auto show = [](const std::optional<double>& s) { return s ? std::to_string(*s) : std::string("none"); };
  std::cout << "first peak strain: reference " << show(c.peak_strain_ref) << ", other " << show(c.peak_strain_other)
            << '\n';
  return kOk;
}

int cmd_verify(double perturb_material) {
  const auto t0 = Clock::now();
  const MaterialParams params;
  MaterialParams analytic = params;
  analytic.c1 *= 1.0 + perturb_material;
  const auto coarse = std::make_shared<const Mesh>(load_mesh(fixture_path("rve_coarse.json")));
  std::vector<CheckResult> results;
  results.push_back(check_material(params, analytic, 10, 2));
  results.push_back(check_stress_free(coarse, {-0.05, 0.0, 0.05}, params));
  results.push_back(check_effective_tangents(coarse, bounded_inputs(2, -0.025, 3), params));
  results.push_back(check_pullback(coarse, bounded_inputs(1, -0.05, 4).front(), params));
  results.push_back(check_weighted_stress(coarse, bounded_inputs(3, 0.05, 5), params));

  const MicroModelCache models(coarse, params);
  const SnapshotSet set = generate_snapshots(models, sample_parameters(SamplingPlan::paper(2, 6)), 10);
  TrainingSettings ts;
  ts.params = params;
  ts.cubature.k_max = 0;
  const TrainingResult tr = train_rom(read_text(fixture_path("rve_coarse.json")), set, ts);
  for (auto& r : check_cubature(tr.system, tr.artifact.scheme)) results.push_back(r);

  bool ok = true;
  for (auto& r : results) {
    ok = ok && r.pass;
    r.seconds = 0.0;
  }
  std::cout << check_table(results, false);
  std::cout << (ok ? "all checks passed" : "some checks failed") << '\n';
  std::cerr << "verify wall time " << since(t0) << " s\n";
  return ok ? kOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homog2: second-order homogenization with a hyperreduced micro model"};
  app.require_subcommand(1);
  std::string config_path, mode, artifact, ref_csv, other_csv;
  double perturb_material = 0.0;

  auto* sample = app.add_subcommand("sample", "solve the sampled micro load paths and store snapshots");
  sample->add_option("--config", config_path, "run configuration (JSON)")->required();
  auto* train = app.add_subcommand("train", "build bases, cubature and the ROM artifact");
  train->add_option("--config", config_path, "run configuration (JSON)")->required();
  auto* macro = app.add_subcommand("macro", "run the plate compression");
  macro->add_option("--config", config_path, "run configuration (JSON)")->required();
  macro->add_option("--mode", mode, "constitutive model")->required()->check(CLI::IsMember({"full", "rom"}));
  macro->add_option("--artifact", artifact, "ROM artifact (rom mode)");
  auto* compare = app.add_subcommand("compare", "compare two curve CSV files");
  compare->add_option("reference", ref_csv, "reference curve")->required();
  compare->add_option("other", other_csv, "compared curve")->required();
  auto* verify = app.add_subcommand("verify", "run the built-in consistency checks");
  verify->add_option("--perturb-material", perturb_material)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*compare) return cmd_compare(ref_csv, other_csv);
    if (*verify) return cmd_verify(perturb_material);
    if (*macro && mode == "rom" && artifact.empty()) {
      std::cerr << "error: --mode rom requires --artifact\n";
      return kUsage;
    }
    const RunConfig cfg = load_config(config_path);
    if (!std::filesystem::exists(cfg.mesh)) {
      std::cerr << "error: mesh not found: " << cfg.mesh.string() << '\n';
      return kUsage;
    }
    if (*sample) return cmd_sample(cfg);
    if (*train) return cmd_train(cfg);
    return cmd_macro(cfg, mode, artifact);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const GeometryError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  }
}
