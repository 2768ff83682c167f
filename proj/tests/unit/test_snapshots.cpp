#include <doctest.h>

#include "homog2/snapshots.hpp"
#include "test_support.hpp"

#include <filesystem>

using namespace homog2;
using namespace homog2::testing;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("homog2_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE("snapshots") {
  TEST_CASE("paper plan has five groups of twenty inside the bounds") {
    const SamplingPlan plan = SamplingPlan::paper();
    const auto inputs = sample_parameters(plan);
    REQUIRE(inputs.size() == 100);
    const double zetas[] = {-0.05, -0.025, 0.0, 0.025, 0.05};
    for (int s = 0; s < 100; ++s) {
      CHECK(inputs[s].zeta == zetas[s / 20]);
      const Vec4 f = flatten(Mat2(inputs[s].fbar - Mat2::Identity()));
      CHECK((f.array() >= plan.bounds.f_lo.array()).all());
      CHECK((f.array() <= plan.bounds.f_hi.array()).all());
      CHECK(f(0) >= -0.1);
      CHECK(f(0) <= 0.02);
      CHECK((inputs[s].gbar.array().abs() <= 0.05).all());
    }
  }

  TEST_CASE("sampling is deterministic in the seed") {
    const auto a = sample_parameters(SamplingPlan::paper(3, 11));
    const auto b = sample_parameters(SamplingPlan::paper(3, 11));
    const auto c = sample_parameters(SamplingPlan::paper(3, 12));
    REQUIRE(a.size() == b.size());
    bool same = true, differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      same = same && a[i].fbar == b[i].fbar && a[i].gbar == b[i].gbar;
      differs = differs || a[i].fbar != c[i].fbar;
    }
    CHECK(same);
    CHECK(differs);
  }

  TEST_CASE("invalid plans are rejected") {
    SamplingPlan plan = SamplingPlan::paper(1);
    plan.loadsteps = 0;
    CHECK_THROWS_AS(sample_parameters(plan), InputError);
    plan = SamplingPlan::paper(1);
    plan.bounds.f_lo(0) = 0.5;
    CHECK_THROWS_AS(sample_parameters(plan), InputError);
    plan = SamplingPlan::paper(0);
    CHECK(sample_parameters(plan).empty());
  }

  TEST_CASE("snapshot layout and metadata") {
    const SnapshotSet& s = coarse_snapshots();
    const int nq = kQuadPerElement * coarse_mesh()->num_elements();
    CHECK(s.w.rows() == coarse_mesh()->num_dofs());
    CHECK(s.y.rows() == 4 * nq);
    CHECK(s.yh.rows() == 8 * nq);
    CHECK(s.w.cols() == s.cols());
    CHECK(s.y.cols() == s.cols());
    CHECK(s.yh.cols() == s.cols());
    CHECK(s.cols() <= 100);
    CHECK(s.meta.front().step == 1);
    CHECK(s.meta.front().t == doctest::Approx(0.1));
    for (const auto& m : s.meta) CHECK(m.t > 0.0);
    for (int c = 0; c < s.cols(); ++c) CHECK(s.w.col(c).norm() > 0.0);
  }

  TEST_CASE("weighted stress columns average to the effective stress") {
    const MicroModel model(coarse_mesh(), -0.025, MaterialParams{});
    const MacroInput in = sample_parameters(SamplingPlan::paper(2, 17))[2];
    std::vector<Mat2> p;
    model.solve(in, 10, [&](const MicroSolution& sol, double) { p.push_back(model.effective_stress(sol).first); });
    const SnapshotSet& s = coarse_snapshots();
    int checked = 0;
    for (int c = 0; c < s.cols(); ++c) {
      if (s.meta[c].sample != 2) continue;
      Mat2 avg = Mat2::Zero();
      for (int q = 0; q < model.num_quad(); ++q)
        avg += model.quadrature().weight(q) * unflatten(s.y.col(c).segment<4>(4 * q));
      avg /= model.volume();
      CHECK((avg - p.at(s.meta[c].step - 1)).cwiseAbs().maxCoeff() < 1e-10);
      ++checked;
    }
    CHECK(checked == 10);
  }

  TEST_CASE("failed samples are skipped and reported") {
    const MicroModelCache models(coarse_mesh(), MaterialParams{});
    auto inputs = sample_parameters(SamplingPlan::paper(1, 2));
    inputs.resize(2);
    inputs[1].fbar << -1.0, 0.0, 0.0, -1.0;
    GenerationReport report;
    const SnapshotSet s = generate_snapshots(models, inputs, 5, &report);
    CHECK(report.attempted == 2);
    CHECK(report.failed == 1);
    REQUIRE(report.failures.size() == 1);
    CHECK(report.failures[0].find("sample 1") != std::string::npos);
    CHECK(s.cols() == 5);
    for (const auto& m : s.meta) CHECK(m.sample == 0);
  }

  TEST_CASE("store round-trip") {
    const SnapshotSet& s = coarse_snapshots();
    const auto dir = scratch("store");
    GenerationReport report;
    report.attempted = 10;
    write_snapshot_store(dir, s, "abc123", &report);
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    const SnapshotSet r = read_snapshot_store(dir);
    CHECK(r.w == s.w);
    CHECK(r.y == s.y);
    CHECK(r.yh == s.yh);
    REQUIRE(r.meta.size() == s.meta.size());
    for (std::size_t i = 0; i < s.meta.size(); ++i) {
      CHECK(r.meta[i].sample == s.meta[i].sample);
      CHECK(r.meta[i].step == s.meta[i].step);
      CHECK(r.meta[i].t == s.meta[i].t);
      CHECK(r.meta[i].zeta == s.meta[i].zeta);
    }
    CHECK(read_text(dir / "manifest.json").find("abc123") != std::string::npos);
    std::filesystem::resize_file(dir / "w.f64", 16);
    CHECK_THROWS_AS(read_snapshot_store(dir), InputError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("empty store round-trip") {
    const auto dir = scratch("empty");
    write_snapshot_store(dir, SnapshotSet{});
    CHECK(read_snapshot_store(dir).cols() == 0);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("trajectory replay stores one column per converged non-identity state") {
    const MicroModelCache models(coarse_mesh(), MaterialParams{});
    Trajectory t;
    t.zeta = -0.035;
    MacroInput id;
    id.zeta = t.zeta;
    t.states.push_back(id);
    for (int k = 1; k <= 4; ++k) {
      MacroInput in = id;
      in.fbar(1, 1) = 1.0 - 0.005 * k;
      in.gbar(0) = 0.002 * k;
      t.states.push_back(in);
    }
    Trajectory t2 = t;
    t2.zeta = 0.0;
    t2.states.resize(3);
    GenerationReport report;
    const SnapshotSet s = generate_trajectory_snapshots(models, {t, t2}, &report);
    CHECK(report.failed == 0);
    CHECK(s.cols() == 4 + 2);
    CHECK(s.meta[0].sample == 0);
    CHECK(s.meta[4].sample == 1);
    CHECK(s.meta[4].zeta == 0.0);
  }

  TEST_CASE("generation is deterministic across thread counts") {
    const MicroModelCache models(coarse_mesh(), MaterialParams{});
    const auto inputs = sample_parameters(SamplingPlan::paper(1, 23));
    const SnapshotSet a = generate_snapshots(models, inputs, 4, nullptr, 1);
    const SnapshotSet b = generate_snapshots(models, inputs, 4, nullptr, 2);
    CHECK(a.w == b.w);
    CHECK(a.y == b.y);
  }
}
