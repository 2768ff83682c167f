#include <doctest.h>

#include "homog2/macro.hpp"
#include "test_support.hpp"

#include <cmath>
#include <random>

using namespace homog2;
using namespace homog2::testing;

namespace {

MacroMesh skewed_element() {
  MacroMesh m = MacroMesh::rectangle(2.0, 3.0, 1, 1, -0.035);
  m.nodes.col(2) += Vec2(0.3, 0.2);
  m.nodes.col(6) += Vec2(0.1, 0.05);
  m.nodes.col(5) += Vec2(0.15, 0.1);
  return m;
}

// Plane-strain uniaxial stress state diag(lx, ly) with P_xx = 0.
double lateral_stretch(double ly, const MaterialParams& mp) {
  double lx = 1.0;
  for (int it = 0; it < 50; ++it) {
    Mat2 f;
    f << lx, 0, 0, ly;
    const auto r = stress_and_tangent(f, mp);
    const double step = r.stress(0, 0) / r.tangent(0, 0);
    lx -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return lx;
}

}  // namespace

TEST_SUITE("macro") {
  TEST_CASE("reference state has zero residual") {
    const auto [mesh, bc] = plate_problem(PlateSpec{});
    MacroProblem prob(mesh, bc, surrogate_factory(MaterialParams{}, 0.5));
    const Eigen::VectorXd x = prob.initial_state();
    Eigen::VectorXd r;
    prob.assemble(x, prob.evaluate(x), r, nullptr);
    CHECK(r.cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("assembled tangent matches finite differences in all three fields") {
    for (double k : {0.0, 0.4}) {
      MacroProblem prob(skewed_element(), MacroBC{}, surrogate_factory(MaterialParams{}, k));
      std::mt19937_64 rng(11);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      Eigen::VectorXd x = prob.initial_state();
      const int nu = 2 * prob.mesh().num_nodes();
      for (int d = 0; d < x.size(); ++d) x(d) += (d < nu ? 0.03 : 0.05) * u(rng);
      Eigen::VectorXd r;
      Eigen::MatrixXd kt;
      prob.assemble(x, prob.evaluate(x), r, &kt);
      Eigen::MatrixXd fd(x.size(), x.size());
      const double h = 1e-6;
      for (int d = 0; d < x.size(); ++d) {
        Eigen::VectorXd xp = x, xm = x, rp, rm;
        xp(d) += h;
        xm(d) -= h;
        prob.assemble(xp, prob.evaluate(xp), rp, nullptr);
        prob.assemble(xm, prob.evaluate(xm), rm, nullptr);
        fd.col(d) = (rp - rm) / (2 * h);
      }
      CAPTURE(k);
      CHECK(rel_err(kt, fd) < 1e-5);
    }
  }

  TEST_CASE("input errors are reported") {
    MacroProblem prob(skewed_element(), MacroBC{}, surrogate_factory(MaterialParams{}, 0.1));
    Eigen::VectorXd r;
    CHECK_THROWS_AS(prob.assemble(prob.initial_state(), {}, r, nullptr), InputError);
    MacroMesh bad = MacroMesh::rectangle(1.0, 1.0, 1, 1, 0.0);
    std::swap(bad.elements[0][1], bad.elements[0][3]);
    CHECK_THROWS_AS(bad.validate(), InputError);
  }

  TEST_CASE("homogeneous compression patch") {
    const MaterialParams mp;
    const double w = 2.0, h = 3.0, drop = 0.06;
    MacroMesh mesh = MacroMesh::rectangle(w, h, 1, 1, -0.035);
    MacroBC bc;
    for (int a = 0; a < mesh.num_nodes(); ++a) {
      const double y = mesh.nodes(1, a);
      if (y == 0.0) bc.fixed.push_back({mesh.u_dof(a, 1), 0.0, 0.0});
      if (y == h) {
        bc.fixed.push_back({mesh.u_dof(a, 1), 0.0, -1.0});
        bc.reaction_dofs.push_back(mesh.u_dof(a, 1));
      }
    }
    bc.fixed.push_back({mesh.u_dof(0, 0), 0.0, 0.0});
    // shear components of Fhat fixed: removes the rotation-like modes invisible to Sym(grad Fhat)
    for (int fn = 0; fn < mesh.num_fnodes; ++fn) {
      bc.fixed.push_back({mesh.f_dof(fn, 1), 0.0, 0.0});
      bc.fixed.push_back({mesh.f_dof(fn, 2), 0.0, 0.0});
    }
    MacroOptions opts;
    opts.steps = 4;
    opts.record_fields = true;
    MacroProblem prob(mesh, bc, surrogate_factory(mp, 0.3), opts);
    const MacroResult res = prob.run(drop);
    REQUIRE(res.completed);
    const double ly = 1.0 - drop / h;
    const double lx = lateral_stretch(ly, mp);
    Mat2 f;
    f << lx, 0, 0, ly;
    const double force = -stress(f, mp)(1, 1) * w;
    CHECK(std::abs(res.curve.back().reaction - force) < 1e-6 * std::abs(force));
    const Eigen::VectorXd& x = res.final_state.x;
    for (int fn = 0; fn < mesh.num_fnodes; ++fn)
      CHECK((x.segment<4>(mesh.f_dof(fn, 0)) - flatten(f)).norm() < 1e-9);
    for (int a = 0; a < mesh.num_nodes(); ++a) {
      const Vec2 expect((lx - 1) * mesh.nodes(0, a), (ly - 1) * mesh.nodes(1, a));
      CHECK((x.segment<2>(mesh.u_dof(a, 0)) - expect).norm() < 1e-9);
    }
    CHECK(x.segment<4>(mesh.l_dof(0, 0)).norm() < 1e-9);
    CHECK(res.constraint_gap < 1e-8);
  }

  TEST_CASE("plate run with surrogate satisfies the constraint and is deterministic") {
    PlateSpec spec;
    spec.strain = 0.02;
    const auto [mesh, bc] = plate_problem(spec);
    MacroOptions opts;
    opts.steps = 4;
    opts.record_trajectories = true;
    const auto run = [&] {
      MacroProblem prob(mesh, bc, surrogate_factory(MaterialParams{}, 0.5), opts);
      return prob.run(spec.strain * spec.height);
    };
    const MacroResult a = run(), b = run();
    REQUIRE(a.completed);
    CHECK(a.constraint_gap < 1e-8);
    REQUIRE(a.curve.size() == 5);
    for (std::size_t s = 1; s < a.curve.size(); ++s) {
      CHECK(a.curve[s].reaction > a.curve[s - 1].reaction);
      CHECK(a.curve[s].reaction == b.curve[s].reaction);
    }
    const auto traj = to_trajectories(mesh, a);
    CHECK(traj.size() == 32);
    CHECK(traj[0].states.size() == 4);
    CHECK(traj[5].zeta == spec.zeta);
  }

  TEST_CASE("curve CSV round-trips at 17 digits") {
    MacroResult res;
    res.curve = {{0, 0.0, 0.0, 0}, {1, 0.1 / 3.0, 2.0 / 7.0, 3}};
    const std::string csv = curve_csv(res, 20.0, 6.0);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# schema_version 1", 0) == 0);
    std::getline(in, line);
    std::getline(in, line);
    std::getline(in, line);
    double step, disp, force;
    char c1, c2;
    std::istringstream row(line);
    row >> step >> c1 >> disp >> c2 >> force;
    CHECK(disp == (0.1 / 3.0) / 20.0);
    CHECK(force == (2.0 / 7.0) / 6.0);
    const Curve c = parse_curve_csv(csv);
    REQUIRE(c.strain.size() == 2);
    CHECK(c.strain[1] == (0.1 / 3.0) / 20.0);
    CHECK(c.force[1] == (2.0 / 7.0) / 6.0);
    CHECK_THROWS_AS(parse_curve_csv("step,a,b\n1;2;3\n"), InputError);
  }

  TEST_CASE("curve comparison and peak detection") {
    Curve a{{0, 0.01, 0.02, 0.03, 0.04}, {0, 1.0, 2.0, 1.5, 1.8}};
    Curve b{{0, 0.015, 0.03}, {0, 1.5, 1.6}};
    REQUIRE(first_peak(a).has_value());
    CHECK(*first_peak(a) == 2);
    CHECK_FALSE(first_peak(b).has_value());
    const CurveComparison c = compare_curves(a, b);
    CHECK(c.covered == doctest::Approx(0.03));
    CHECK(c.peak_force == 2.0);
    // at 0.02 the interpolated force is 1.5 + (0.005 / 0.015) 0.1
    CHECK(c.max_gap == doctest::Approx(2.0 - (1.5 + 0.1 / 3.0)));
    CHECK(c.relative_gap == doctest::Approx(c.max_gap / 2.0));
  }
}
