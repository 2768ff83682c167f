#include "homog2/checks.hpp"

#include "homog2/errors.hpp"
#include "homog2/snapshots.hpp"
#include "homog2/transform.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

namespace homog2 {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

CheckResult make(std::string name, double value, double limit, Clock::time_point t0, std::string detail = "") {
  CheckResult r;
  r.name = std::move(name);
  r.value = value;
  r.limit = limit;
  r.pass = std::isfinite(value) && value < limit;
  r.seconds = since(t0);
  r.detail = std::move(detail);
  return r;
}

double rel(const auto& a, const auto& b, double floor = 0.0) {
  return (a - b).norm() / std::max({b.norm(), floor, 1e-300});
}

}  // namespace

std::string check_table(const std::vector<CheckResult>& results, bool timings) {
  std::ostringstream out;
  out << std::left << std::setw(34) << "check" << std::setw(7) << "result" << std::setw(13) << "error"
      << std::setw(11) << "limit" << (timings ? "seconds" : "") << '\n';
  for (const auto& r : results) {
    out << std::left << std::setw(34) << r.name << std::setw(7) << (r.pass ? "PASS" : "FAIL") << std::setw(13)
        << std::setprecision(3) << std::scientific << r.value << std::setw(11) << std::setprecision(1) << r.limit;
    if (timings) out << std::fixed << std::setprecision(1) << r.seconds;
    out << std::defaultfloat;
    if (!r.detail.empty()) out << "  " << r.detail;
    out << '\n';
  }
  return out.str();
}

std::vector<MacroInput> bounded_inputs(int count, double zeta, std::uint64_t seed) {
  SamplingPlan plan;
  plan.groups = {{zeta, count}};
  plan.seed = seed;
  return sample_parameters(plan);
}

CheckResult check_material(const MaterialParams& reference, const MaterialParams& analytic, int samples,
                           std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-6;
  double worst_p = 0.0, worst_a = 0.0;
  for (int s = 0; s < samples; ++s) {
    Mat2 f;
    f << 1 + 0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng), 1 + 0.1 * u(rng);
    const PointResponse r = stress_and_tangent(f, analytic);
    Mat2 p;
    Mat4 a;
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) {
        Mat2 fp = f, fm = f;
        fp(k, l) += h;
        fm(k, l) -= h;
        p(k, l) = (energy(fp, reference) - energy(fm, reference)) / (2 * h);
        a.col(idx2(k, l)) = flatten(Mat2((stress(fp, reference) - stress(fm, reference)) / (2 * h)));
      }
    worst_p = std::max(worst_p, rel(r.stress, p, reference.c1));
    worst_a = std::max(worst_a, rel(r.tangent, a));
  }
  std::ostringstream d;
  d << "stress " << std::scientific << std::setprecision(2) << worst_p << ", tangent " << worst_a;
  CheckResult out = make("material FD error / limit", std::max(worst_p / 1e-6, worst_a / 1e-5), 1.0, t0, d.str());
  return out;
}

CheckResult check_stress_free(std::shared_ptr<const Mesh> mesh, const std::vector<double>& zetas,
                              const MaterialParams& params) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (double z : zetas) {
    const MicroModel model(mesh, z, params);
    MacroInput in;
    in.zeta = z;
    const MicroSolution sol = model.solve(in, 1);
    if (!sol.converged) return make("stress-free reference", INFINITY, 1e-12, t0, "solve failed");
    const auto [p, q] = model.effective_stress(sol);
    worst = std::max({worst, sol.w.cwiseAbs().maxCoeff(), p.norm(), q.norm()});
  }
  return make("stress-free reference", worst, 1e-12, t0);
}

CheckResult check_effective_tangents(std::shared_ptr<const Mesh> mesh, const std::vector<MacroInput>& states,
                                     const MaterialParams& params, double h) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (const auto& in : states) {
    const MicroModel model(mesh, in.zeta, params);
    MicroSolution base = model.solve(in, 20);
    if (!base.converged) return make("effective tangent FD", INFINITY, 1e-5, t0, "state did not converge");
    const EffectiveResponse r = model.effective_tangents(base);
    Eigen::Matrix<double, 12, 10> an, fd;
    an << r.dp_df, r.dp_dg, r.dq_df, r.dq_dg;
    for (int c = 0; c < 10; ++c) {
      MacroInput plus = in, minus = in;
      if (c < 4) {
        plus.fbar(c / 2, c % 2) += h;
        minus.fbar(c / 2, c % 2) -= h;
      } else {
        plus.gbar(c - 4) += h;
        minus.gbar(c - 4) -= h;
      }
      const MicroSolution sp = model.solve_from(base, plus, 1), sm = model.solve_from(base, minus, 1);
      if (!sp.converged || !sm.converged) return make("effective tangent FD", INFINITY, 1e-5, t0, "FD solve failed");
      const auto [pp, qp] = model.effective_stress(sp);
      const auto [pm, qm] = model.effective_stress(sm);
      fd.col(c) << flatten(Mat2((pp - pm) / (2 * h))), (qp - qm) / (2 * h);
    }
    worst = std::max(worst, rel(an, fd));
  }
  return make("effective tangent FD", worst, 1e-5, t0);
}

CheckResult check_pullback(std::shared_ptr<const Mesh> mesh, const MacroInput& input, const MaterialParams& params) {
  const auto t0 = Clock::now();
  const MicroModel model(mesh, input.zeta, params);
  const auto morphed = std::make_shared<const Mesh>(mesh->with_nodes(morphed_nodes(*mesh, model.map())));
  const MicroModel direct = MicroModel::physical(morphed, params);
  MacroInput in2 = input;
  in2.zeta = direct.zeta();
  const MicroSolution a = model.solve(input, 20), b = direct.solve(in2, 20);
  if (!a.converged || !b.converged) return make("pull-back equivalence", INFINITY, 1e-8, t0, "solve failed");
  return make("pull-back equivalence", rel(model.effective_stress(a).first, direct.effective_stress(b).first), 1e-8,
              t0);
}

CheckResult check_weighted_stress(std::shared_ptr<const Mesh> mesh, const std::vector<MacroInput>& states,
                                  const MaterialParams& params) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (const auto& in : states) {
    const MicroModel model(mesh, in.zeta, params);
    const MicroSolution sol = model.solve(in, 20);
    if (!sol.converged) return make("weighted stress average", INFINITY, 1e-10, t0, "solve failed");
    const Mat2 p = model.effective_stress(sol).first;
    const Eigen::VectorXd y = model.weighted_stress(sol);
    Mat2 py = Mat2::Zero();
    for (int q = 0; q < model.num_quad(); ++q) py += model.quadrature().weight(q) * unflatten(y.segment<4>(4 * q));
    worst = std::max(worst, (py / model.volume() - p).cwiseAbs().maxCoeff());
  }
  return make("weighted stress average (MPa)", worst, 1e-10, t0);
}

std::vector<CheckResult> check_cubature(const CubatureSystem& sys, const CubatureScheme& scheme) {
  const auto t0 = Clock::now();
  std::vector<CheckResult> out;
  std::vector<int> all(sys.cols());
  for (int q = 0; q < sys.cols(); ++q) all[q] = q;
  const auto full = cubature_residuals(sys, all, sys.h_full);
  out.push_back(make("cubature full-selection residual", *std::max_element(full.begin(), full.end()), 1e-10, t0));
  const auto r = cubature_residuals(sys, scheme.indices, scheme.weights);
  const auto& eps = scheme.config.eps;
  double ratio = 0.0;
  for (int b = 0; b < 3; ++b) ratio = std::max(ratio, r[b] / eps[b]);
  std::ostringstream d;
  d << std::scientific << std::setprecision(2) << "r = " << r[0] << ", " << r[1] << ", " << r[2] << ", " << r[3]
    << "; Q = " << scheme.size() << " of " << sys.cols();
  CheckResult blocks = make("cubature block residuals / eps", ratio, 1.0, t0, d.str());
  blocks.pass = blocks.pass && scheme.converged;
  out.push_back(blocks);
  out.push_back(make("cubature volume error / eps4", r[3] / eps[3], 1.0, t0));
  const Eigen::VectorXd scale = row_scale(sys, scheme.config);
  Eigen::MatrixXd a(sys.rows(), scheme.size());
  for (int k = 0; k < scheme.size(); ++k) a.col(k) = scale.cwiseProduct(sys.a_hat.col(scheme.indices[k]));
  out.push_back(
      make("cubature NNLS KKT", nnls_kkt_residual(a, scale.cwiseProduct(sys.b_hat), scheme.weights), 1e-10, t0));
  return out;
}

}  // namespace homog2
