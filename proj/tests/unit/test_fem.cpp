#include <doctest.h>

#include "homog2/fem.hpp"

#include <random>

using namespace homog2;

TEST_SUITE("fem") {
  TEST_CASE("Lagrange property at the nodes") {
    const std::array<Vec2, 6> local{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), Vec2(0.5, 0), Vec2(0.5, 0.5), Vec2(0, 0.5)};
    for (int a = 0; a < 6; ++a) {
      const auto s = shape_tri6(local[a](0), local[a](1));
      CHECK((s.n - Tri6Values::Unit(a)).cwiseAbs().maxCoeff() < 1e-15);
    }
  }

  TEST_CASE("partition of unity and gradients") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
      double xi = u(rng), eta = u(rng);
      if (xi + eta > 1) {
        xi = 1 - xi;
        eta = 1 - eta;
      }
      const auto s = shape_tri6(xi, eta);
      CHECK(std::abs(s.n.sum() - 1.0) < 1e-14);
      CHECK(s.dn.colwise().sum().cwiseAbs().maxCoeff() < 1e-13);
      const double h = 1e-7;
      const auto sx = shape_tri6(xi + h, eta), sy = shape_tri6(xi, eta + h);
      CHECK(((sx.n - s.n) / h - s.dn.col(0)).cwiseAbs().maxCoeff() < 1e-5);
      CHECK(((sy.n - s.n) / h - s.dn.col(1)).cwiseAbs().maxCoeff() < 1e-5);
    }
  }

  TEST_CASE("three-point rule is exact to degree two") {
    const auto& r = triangle_rule3();
    // int over reference triangle of xi^a eta^b = a! b! / (a + b + 2)!
    const auto exact = [](int a, int b) {
      const auto fact = [](int n) { double f = 1; for (int i = 2; i <= n; ++i) f *= i; return f; };
      return fact(a) * fact(b) / fact(a + b + 2);
    };
    for (int a = 0; a <= 2; ++a)
      for (int b = 0; a + b <= 2; ++b) {
        double s = 0;
        for (int p = 0; p < 3; ++p) s += r.weights[p] * std::pow(r.points[p](0), a) * std::pow(r.points[p](1), b);
        CHECK(s == doctest::Approx(exact(a, b)).epsilon(1e-14));
      }
  }

  TEST_CASE("line rule integrates quintics") {
    const auto& r = line_rule3();
    double s = 0;
    for (int g = 0; g < 3; ++g) s += r.weights[g] * std::pow(r.points[g], 5);
    CHECK(s == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    const auto n = shape_line3(0.3);
    CHECK(n.sum() == doctest::Approx(1.0));
  }

  TEST_CASE("dof numbering") {
    const DofMap d{5};
    CHECK(d.size() == 10);
    CHECK(d.dof(3, 1) == 7);
  }
}
