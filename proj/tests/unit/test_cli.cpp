#include <doctest.h>

#include "homog2/config.hpp"
#include "test_support.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace homog2;
using namespace homog2::testing;

namespace {

struct RunOutput {
  int code = -1;
  std::string out;
};

RunOutput run_cli(const std::string& args) {
  const std::string cmd = std::string(HOMOG2_CLI) + " " + args + " 2>/dev/null";
  RunOutput r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("homog2_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("an empty configuration gives the defaults and a stable hash") {
    const RunConfig a = parse_config("{}");
    const RunConfig b = parse_config("{\"schema_version\": 1}");
    CHECK(a.hash.size() == 16);
    CHECK(a.hash == b.hash);
    CHECK(a.material.c1 == 0.55);
    CHECK(a.sampling.groups.size() == 5);
    CHECK(a.cubature.c == std::array<double, 3>{10.0, 1.6, 1.1});
    const RunConfig c = parse_config("{\"sampling\": {\"seed\": 99}}");
    CHECK(c.hash != a.hash);
  }

  TEST_CASE("normalized dump parses back to the same configuration") {
    const RunConfig a = parse_config(R"({"sampling": {"per_group": 3, "loadsteps": 5}, "pod": {"w": {"rank": 7}}})");
    CHECK(a.sampling.loadsteps == 5);
    CHECK(a.pod_w.rank == 7);
    auto j = nlohmann::json::parse(a.dump());
    j["geometry"]["mesh"] = a.mesh.string();
    CHECK(parse_config(j.dump()).hash == a.hash);
  }

  TEST_CASE("unknown keys are rejected at every level") {
    CHECK_THROWS_AS(parse_config(R"({"sampels": {}})"), InputError);
    CHECK_THROWS_AS(parse_config(R"({"sampling": {"seeds": 1}})"), InputError);
    CHECK_THROWS_AS(parse_config(R"({"pod": {"w": {"tol": 1e-3}}})"), InputError);
    CHECK_THROWS_AS(parse_config(R"({"macro": {"strian": 0.1}})"), InputError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"cubature": {"kmax": 3}})"), doctest::Contains("kmax"), InputError);
  }

  TEST_CASE("wrong types and out-of-range values are rejected") {
    CHECK_THROWS_AS(parse_config(R"({"threads": "two"})"), InputError);
    CHECK_THROWS_AS(parse_config(R"({"sampling": {"loadsteps": 2.5}})"), InputError);
    CHECK_THROWS_AS(parse_config(R"({"pod": {"y": {"tolerance": 2.0}}})"), InputError);
    CHECK_THROWS_AS(parse_config(R"({"pod": {"y": {"tolerance": 1e-3, "rank": 3}}})"), InputError);
    CHECK_THROWS_AS(parse_config(R"({"cubature": {"eps": [1e-4, 1e-4]}})"), InputError);
    CHECK_THROWS_AS(parse_config(R"({"cubature": {"c": [1, -1, 1]}})"), InputError);
    CHECK_THROWS_AS(parse_config(R"({"schema_version": 2})"), InputError);
    CHECK_THROWS_AS(parse_config("{not json"), InputError);
    CHECK_THROWS_AS(parse_config(R"({"preset": "paper-N50"})"), InputError);
  }

  TEST_CASE("presets fix the displacement rank") {
    const RunConfig a = parse_config(R"({"preset": "paper-N78"})");
    CHECK(a.pod_w.rank == 78);
    CHECK(a.pod_y.tolerance == 5e-3);
    for (double e : a.cubature.eps) CHECK(e == 1e-4);
    RunConfig b = parse_config("{}");
    apply_preset(b, "paper-N112");
    CHECK(b.pod_w.rank == 112);
  }

  TEST_CASE("usage errors exit with code two") {
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("frobnicate").code == 2);
    CHECK(run_cli("macro --config x.json --mode rom").code == 2);
    CHECK(run_cli("macro --config x.json --mode dns").code == 2);
    CHECK(run_cli("sample --config /nonexistent/run.json").code == 2);
    CHECK(run_cli("compare /nonexistent/a.csv /nonexistent/b.csv").code == 2);
    const auto dir = scratch("bad");
    std::ofstream(dir / "run.json") << R"({"sampling": {"per_grup": 1}})";
    CHECK(run_cli("sample --config " + (dir / "run.json").string()).code == 2);
    std::ofstream(dir / "mesh.json") << R"({"geometry": {"mesh": "no_such_mesh.json"}})";
    CHECK(run_cli("sample --config " + (dir / "mesh.json").string()).code == 2);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("an empty sampling plan writes an empty store and succeeds") {
    const auto dir = scratch("empty");
    std::ofstream(dir / "run.json") << R"({"geometry": {"mesh": "rve_coarse.json"}, "sampling": {"per_group": 0},
                                          "paths": {"store": "store"}})";
    const RunOutput r = run_cli("sample --config " + (dir / "run.json").string());
    CHECK(r.code == 0);
    CHECK(r.out.find("snapshots 0") != std::string::npos);
    CHECK(read_snapshot_store(dir / "store").cols() == 0);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("compare reports the gap between two curves") {
    const auto dir = scratch("compare");
    write_text(dir / "a.csv", "step,strain,force\n0,0,0\n1,0.01,1\n2,0.02,2\n");
    write_text(dir / "b.csv", "# comment\nstep,strain,force\n0,0,0\n1,0.02,2.2\n");
    const RunOutput r = run_cli("compare " + (dir / "a.csv").string() + " " + (dir / "b.csv").string());
    CHECK(r.code == 0);
    CHECK(r.out.find("max force gap 0.2") != std::string::npos);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("verify passes, is deterministic, and catches a perturbed material") {
    const RunOutput a = run_cli("verify");
    const RunOutput b = run_cli("verify");
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("all checks passed") != std::string::npos);
    const RunOutput c = run_cli("verify --perturb-material 1e-3");
    CHECK(c.code == 1);
    CHECK(c.out.find("FAIL") != std::string::npos);
  }
}
