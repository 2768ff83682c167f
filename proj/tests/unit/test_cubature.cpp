#include <doctest.h>

#include "homog2/checks.hpp"
#include "homog2/cubature.hpp"
#include "test_support.hpp"

#include <random>
#include <set>

using namespace homog2;
using namespace homog2::testing;

TEST_SUITE("cubature") {
  TEST_CASE("nonnegativity clips a negative target") {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::Vector2d b(1.0, -1.0);
    const NnlsResult r = nnls(a, b);
    CHECK(r.converged);
    CHECK(r.x(0) == doctest::Approx(1.0));
    CHECK(r.x(1) == 0.0);
  }

  TEST_CASE("random problems beat the clipped least-squares solution and satisfy KKT") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::MatrixXd a(20, 8);
      Eigen::VectorXd b(20);
      for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
      for (int i = 0; i < 20; ++i) b(i) = n(rng);
      const NnlsResult r = nnls(a, b);
      CHECK(r.x.minCoeff() >= 0.0);
      const Eigen::VectorXd clipped = a.colPivHouseholderQr().solve(b).cwiseMax(0.0);
      CHECK((a * r.x - b).norm() <= (a * clipped - b).norm() + 1e-12);
      CHECK(nnls_kkt_residual(a, b, r.x) < 1e-10);
    }
  }

  TEST_CASE("system reproduces full quadrature and has the block layout") {
    const TrainingResult& tr = coarse_training();
    const CubatureSystem& sys = tr.system;
    const int n = tr.n(), m = tr.m(), l = tr.l();
    CHECK(sys.block[1] - sys.block[0] == n * m);
    CHECK(sys.block[2] - sys.block[1] == 4 * m);
    CHECK(sys.block[3] - sys.block[2] == 8 * l);
    CHECK(sys.block[4] - sys.block[3] == 1);
    CHECK(sys.cols() == kQuadPerElement * coarse_mesh()->num_elements());
    CHECK((sys.a_hat * sys.h_full - sys.b_hat).cwiseAbs().maxCoeff() < 1e-10 * sys.volume);
    CHECK(sys.sigma.minCoeff() > 0.0);
    CHECK(sys.b_hat.head(sys.block[3]).norm() == 0.0);
    CHECK(sys.b_hat(sys.block[3]) == doctest::Approx(sys.volume));
  }

  TEST_CASE("recentering removes constant stress modes") {
    const Mesh& mesh = *coarse_mesh();
    const QuadratureCache qc = build_quadrature(mesh);
    const int nq = qc.size();
    PodBasis w, y, yh;
    w.v = Eigen::MatrixXd::Zero(mesh.num_dofs(), 1);
    w.v(0, 0) = 1.0;
    y.v = Eigen::MatrixXd::Constant(4 * nq, 1, 1.0 / std::sqrt(4.0 * nq));
    yh.v = Eigen::MatrixXd::Constant(8 * nq, 1, 1.0 / std::sqrt(8.0 * nq));
    for (PodBasis* b : {&w, &y, &yh}) {
      b->sigma = Eigen::VectorXd::Ones(1);
      b->sigma_all = b->sigma;
    }
    const CubatureSystem sys = build_cubature_system(mesh, qc, w, y, yh);
    CHECK(sys.a_hat.middleRows(sys.block[1], 4).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(sys.a_hat.middleRows(sys.block[2], 8).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("selection converges with nonnegative weights and decreasing residual") {
    const TrainingResult& tr = coarse_training();
    const CubatureScheme& s = tr.artifact.scheme;
    REQUIRE(s.converged);
    CHECK(static_cast<int>(s.weights.size()) == s.size());
    CHECK(s.weights.minCoeff() >= 0.0);
    CHECK(std::set<int>(s.indices.begin(), s.indices.end()).size() == s.indices.size());
    for (std::size_t k = 1; k < s.history.size(); ++k) CHECK(s.history[k].total <= s.history[k - 1].total + 1e-12);
    const auto r = cubature_residuals(tr.system, s.indices, s.weights);
    for (int b = 0; b < 4; ++b) CHECK(r[b] < s.config.eps[b]);
    CHECK(std::abs(s.weights.sum() - tr.system.volume) / tr.system.volume < s.config.eps[3]);
    for (const auto& c : check_cubature(tr.system, s)) {
      CAPTURE(c.name);
      CHECK(c.pass);
    }
  }

  TEST_CASE("selection is deterministic") {
    const TrainingResult& tr = coarse_training();
    const CubatureScheme again = select_points(tr.system, tr.artifact.scheme.config);
    CHECK(again.indices == tr.artifact.scheme.indices);
    CHECK(again.weights == tr.artifact.scheme.weights);
  }

  TEST_CASE("tuned block weights select fewer points than unit weights") {
    const TrainingResult& tr = coarse_training();
    CubatureConfig unit = tr.artifact.scheme.config;
    unit.c = {1.0, 1.0, 1.0};
    unit.k_max = 0;
    const CubatureScheme s1 = select_points(tr.system, unit);
    REQUIRE(s1.converged);
    CHECK(tr.q() < s1.size());
  }

  TEST_CASE("reduced integration of stress modes is bounded by the block residual") {
    // For a field sum_k alpha_k B_k the integration error is
    // sum_k alpha_k r_k + (1 - sum h / V) sum_k alpha_k b_k, and Cauchy-Schwarz
    // bounds the first term by sqrt(sum alpha_k^2 / sigma_k) r2 trace(Sigma_2).
    const TrainingResult& tr = coarse_training();
    const CubatureSystem& sys = tr.system;
    const CubatureScheme& s = tr.artifact.scheme;
    const PodBasis& y = tr.artifact.y;
    const double r2 = cubature_residuals(sys, s.indices, s.weights)[1];
    const double trace = 4.0 * y.sigma.sum();
    const double vol_err = 1.0 - s.weights.sum() / sys.volume;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::VectorXd alpha(y.rank());
      for (int i = 0; i < y.rank(); ++i) alpha(i) = n(rng);
      const Eigen::VectorXd field = y.v * alpha;
      Eigen::Vector4d full = Eigen::Vector4d::Zero(), red = Eigen::Vector4d::Zero();
      for (int q = 0; q < sys.cols(); ++q) full += sys.h_full(q) * field.segment<4>(4 * q);
      for (int k = 0; k < s.size(); ++k) red += s.weights(k) * field.segment<4>(4 * s.indices[k]);
      const double bound =
          std::sqrt((alpha.array().square() / y.sigma.array()).sum()) * r2 * trace + std::abs(vol_err) * full.norm();
      CHECK((full - red).norm() <= bound * (1 + 1e-9) + 1e-14);
      CHECK(r2 < s.config.eps[1]);
    }
  }

  TEST_CASE("residual CSV") {
    const CubatureScheme& s = coarse_training().artifact.scheme;
    const std::string csv = residual_csv(s);
    CHECK(csv.rfind("iteration,Q,r1,r2,r3,r4\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(s.history.size()) + 1);
    for (std::size_t k = 0; k + 1 < s.history.size(); ++k)
      for (double r : s.history[k].r) CHECK(r > 0.0);
  }
}
