#include <doctest.h>

#include "homog2/errors.hpp"
#include "homog2/fixtures.hpp"
#include "homog2/mesh.hpp"
#include "homog2/spline.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace homog2;

namespace {

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("control point formulas") {
    const auto p = control_points(0.025, 0);
    CHECK(p[0](0) == doctest::Approx(0.075));
    CHECK(p[0](1) == doctest::Approx(0.5));
    const auto q = control_points(0.0, 0);
    CHECK(q[2](0) == doctest::Approx(0.5));
    CHECK(q[2](1) == doctest::Approx(0.05));
    const auto bl = control_points(0.025, 2);
    for (int k = 0; k < 8; ++k) CHECK((bl[k] - (p[k] - Vec2(1.0, 1.0))).norm() < 1e-15);
    CHECK_THROWS_AS(control_points(0.0, 4), std::out_of_range);
  }

  TEST_CASE("spline is closed and centred") {
    for (int h = 0; h < 4; ++h) {
      const Vec2 a = spline_boundary_target(0.01, h, 0.0);
      const Vec2 b = spline_boundary_target(0.01, h, 1.0 - 1e-12);
      CHECK((a - b).norm() < 1e-9);
    }
    Vec2 c = Vec2::Zero();
    const int n = 4000;
    for (int k = 0; k < n; ++k) c += spline_boundary_target(0.0, 0, static_cast<double>(k) / n);
    c /= n;
    CHECK((c - Vec2(0.5, 0.5)).norm() < 1e-12);
  }

  TEST_CASE("spline stays inside its cell") {
    for (int k = 0; k < 1000; ++k) {
      const Vec2 x = spline_boundary_target(0.055, 0, k / 1000.0);
      CHECK(x.minCoeff() > 0.0);
      CHECK(x.maxCoeff() < 1.0);
    }
  }

  TEST_CASE("spline tangent matches finite differences") {
    const double t = 0.37, h = 1e-6;
    const Vec2 fd = (spline_boundary_target(-0.02, 1, t + h) - spline_boundary_target(-0.02, 1, t - h)) / (2 * h);
    CHECK((fd - spline_tangent(-0.02, 1, t)).norm() < 1e-7);
  }

  TEST_CASE("projection recovers the curve parameter") {
    for (double t : {0.0, 0.123, 0.5, 0.8711}) {
      const Vec2 x = spline_boundary_target(0.025, 3, t);
      const double tp = project_to_spline(0.025, 3, x);
      CHECK((spline_boundary_target(0.025, 3, tp) - x).norm() < 1e-12);
    }
  }

  TEST_CASE("parent mesh loads with four holes") {
    const Mesh m = load_mesh(fixture_path("rve_parent.json"));
    CHECK(m.bounds(0) == -1.0);
    CHECK(m.bounds(1) == 1.0);
    CHECK(m.bounds(2) == -1.0);
    CHECK(m.bounds(3) == 1.0);
    for (int k = 0; k < 4; ++k) CHECK(m.tags.count("hole_" + std::to_string(k)) == 1);
    CHECK(m.num_elements() > 1000);
    CHECK(m.lr_pairs.size() == m.tags.at("left").size() + 2);
    CHECK(m.bt_pairs.size() == m.tags.at("bottom").size() + 1);
    for (auto [l, r] : m.lr_pairs) CHECK(std::abs(m.nodes(1, l) - m.nodes(1, r)) < 1e-12);
    for (auto [b, t] : m.bt_pairs) CHECK(std::abs(m.nodes(0, b) - m.nodes(0, t)) < 1e-12);
    const auto qc = build_quadrature(m);
    CHECK(qc.size() == 3 * m.num_elements());
    CHECK(qc.weight.minCoeff() > 0.0);
    // Quadratic edges: element-wise quadrature and boundary integral agree.
    CHECK(qc.weight.sum() == doctest::Approx(mesh_area(m)).epsilon(1e-12));
  }

  TEST_CASE("single reference triangle") {
    const Mesh m = load_mesh(fixture_path("tri6_single.json"));
    CHECK(m.num_elements() == 1);
    const auto qc = build_quadrature(m);
    CHECK(qc.size() == 3);
    CHECK(qc.weight.minCoeff() > 0.0);
    CHECK(qc.weight.sum() == doctest::Approx(0.5));
    CHECK_FALSE(m.is_periodic_cell());
  }

  TEST_CASE("displaced left node is reported") {
    auto doc = nlohmann::json::parse(read_text(fixture_path("rve_coarse.json")));
    const int victim = doc["tags"]["left"][3].get<int>();
    doc["nodes"][victim][1] = doc["nodes"][victim][1].get<double>() + 10 * MeshOptions{}.pairing_tolerance;
    try {
      parse_mesh(doc.dump());
      FAIL("expected a pairing error");
    } catch (const InputError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("node " + std::to_string(victim)) != std::string::npos);
      CHECK(msg.find("distance") != std::string::npos);
    }
  }

  TEST_CASE("malformed files are rejected") {
    CHECK_THROWS_AS(parse_mesh("{not json"), InputError);
    CHECK_THROWS_AS(parse_mesh(R"({"nodes": [[0,0]], "elements": [[0,0,0]]})"), InputError);
    CHECK_THROWS_AS(parse_mesh(R"({"nodes": [[0,0],[1,0],[0,1],[0.5,0],[0.5,0.5],[0,0.5]],
                                   "elements": [[0,2,1,5,4,3]]})"),
                    InputError);
    CHECK_THROWS_AS(load_mesh("/nonexistent/mesh.json"), InputError);
  }

  TEST_CASE("morphed copy keeps derived data") {
    const Mesh m = load_mesh(fixture_path("rve_coarse.json"));
    Eigen::Matrix2Xd moved = m.nodes;
    for (const auto& h : m.hole_nodes) moved.col(h.node) *= 1.0;
    const Mesh c = m.with_nodes(moved);
    CHECK(c.lr_pairs == m.lr_pairs);
    moved.col(m.outer_nodes[0])(0) += 1e-3;
    CHECK_THROWS_AS(m.with_nodes(moved), InputError);
  }
}
