#include "homog2/config.hpp"

#include "homog2/errors.hpp"
#include "homog2/fixtures.hpp"
#include "homog2/io.hpp"

#include <json.hpp>

#include <set>
#include <type_traits>

namespace homog2 {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InputError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw InputError("unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    if (!v.is_number_integer()) throw InputError(std::string("wrong type for '") + key + "' in " + where);
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw InputError(std::string("wrong type for '") + key + "' in " + where);
  }
  try {
    out = v.get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("wrong type for '") + key + "' in " + where);
  }
}

template <int N>
void read_vec(const json& j, const char* key, Eigen::Matrix<double, N, 1>& out, const std::string& where) {
  if (!j.contains(key)) return;
  std::vector<double> v;
  read(j, key, v, where);
  if (static_cast<int>(v.size()) != N)
    throw InputError(std::string("'") + key + "' in " + where + " needs " + std::to_string(N) + " values");
  for (int i = 0; i < N; ++i) out(i) = v[i];
}

PodCriterion read_pod(const json& j, const std::string& where, PodCriterion out) {
  check_keys(j, where, {"tolerance", "rank"});
  if (j.contains("tolerance") && j.contains("rank")) throw InputError(where + " takes either tolerance or rank");
  if (j.contains("rank")) {
    int n = 0;
    read(j, "rank", n, where);
    if (n < 1) throw InputError(where + ".rank must be positive");
    return PodCriterion::fixed(n);
  }
  if (j.contains("tolerance")) {
    double t = 0;
    read(j, "tolerance", t, where);
    if (!(t > 0 && t < 1)) throw InputError(where + ".tolerance must lie in (0, 1)");
    return PodCriterion::energy(t);
  }
  return out;
}

json pod_json(const PodCriterion& p) {
  if (p.rank) return {{"rank", *p.rank}};
  return {{"tolerance", p.tolerance}};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

}  // namespace

void apply_preset(RunConfig& cfg, const std::string& name) {
  int n = 0;
  if (name == "paper-N48") n = 48;
  else if (name == "paper-N78") n = 78;
  else if (name == "paper-N112") n = 112;
  else throw InputError("unknown preset '" + name + "'");
  cfg.pod_w = PodCriterion::fixed(n);
  cfg.pod_y = PodCriterion::energy(5e-3);
  cfg.pod_yh = PodCriterion::energy(5e-3);
  cfg.cubature.eps = {1e-4, 1e-4, 1e-4, 1e-4};
  cfg.cubature.c = {10.0, 1.6, 1.1};
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config",
             {"schema_version", "preset", "material", "geometry", "sampling", "pod", "cubature", "macro", "paths",
              "threads"});
  if (j.contains("schema_version") && j["schema_version"] != kSchemaVersion)
    throw InputError("unsupported config schema_version");
  RunConfig cfg;
  if (j.contains("preset")) {
    std::string name;
    read(j, "preset", name, "config");
    apply_preset(cfg, name);
  }
  if (j.contains("material")) {
    const json& m = j["material"];
    check_keys(m, "material", {"c1", "c2", "bulk"});
    read(m, "c1", cfg.material.c1, "material");
    read(m, "c2", cfg.material.c2, "material");
    read(m, "bulk", cfg.material.bulk, "material");
  }
  cfg.material.validate();

  std::string mesh = "rve_parent.json";
  if (j.contains("geometry")) {
    check_keys(j["geometry"], "geometry", {"mesh"});
    read(j["geometry"], "mesh", mesh, "geometry");
  }
  cfg.mesh = resolve(base, mesh);
  if (!std::filesystem::exists(cfg.mesh) && !std::filesystem::path(mesh).is_absolute() &&
      std::filesystem::exists(fixture_path(mesh)))
    cfg.mesh = fixture_path(mesh);

  cfg.sampling = SamplingPlan::paper(20, 1);
  if (j.contains("sampling")) {
    const json& s = j["sampling"];
    check_keys(s, "sampling", {"groups", "per_group", "loadsteps", "seed", "bounds"});
    if (s.contains("groups") && s.contains("per_group")) throw InputError("sampling takes either groups or per_group");
    if (s.contains("per_group")) {
      int per = 0;
      read(s, "per_group", per, "sampling");
      cfg.sampling = SamplingPlan::paper(per, 1);
    }
    if (s.contains("groups")) {
      if (!s["groups"].is_array()) throw InputError("sampling.groups must be an array");
      cfg.sampling.groups.clear();
      for (const auto& g : s["groups"]) {
        check_keys(g, "sampling.groups", {"zeta", "count"});
        ZetaGroup zg;
        read(g, "zeta", zg.zeta, "sampling.groups");
        read(g, "count", zg.count, "sampling.groups");
        cfg.sampling.groups.push_back(zg);
      }
    }
    read(s, "loadsteps", cfg.sampling.loadsteps, "sampling");
    read(s, "seed", cfg.sampling.seed, "sampling");
    if (s.contains("bounds")) {
      const json& b = s["bounds"];
      check_keys(b, "sampling.bounds", {"f_lo", "f_hi", "g_lo", "g_hi"});
      read_vec(b, "f_lo", cfg.sampling.bounds.f_lo, "sampling.bounds");
      read_vec(b, "f_hi", cfg.sampling.bounds.f_hi, "sampling.bounds");
      read_vec(b, "g_lo", cfg.sampling.bounds.g_lo, "sampling.bounds");
      read_vec(b, "g_hi", cfg.sampling.bounds.g_hi, "sampling.bounds");
    }
  }
  for (const auto& g : cfg.sampling.groups)
    if (g.count < 0) throw InputError("sampling group counts must be non-negative");
  cfg.sampling.validate();

  if (j.contains("pod")) {
    const json& p = j["pod"];
    check_keys(p, "pod", {"w", "y", "yh"});
    if (p.contains("w")) cfg.pod_w = read_pod(p["w"], "pod.w", cfg.pod_w);
    if (p.contains("y")) cfg.pod_y = read_pod(p["y"], "pod.y", cfg.pod_y);
    if (p.contains("yh")) cfg.pod_yh = read_pod(p["yh"], "pod.yh", cfg.pod_yh);
  }

  if (j.contains("cubature")) {
    const json& c = j["cubature"];
    check_keys(c, "cubature", {"eps", "c", "k_max"});
    std::vector<double> v;
    if (c.contains("eps")) {
      read(c, "eps", v, "cubature");
      if (v.size() != 4) throw InputError("cubature.eps needs 4 values");
      std::copy(v.begin(), v.end(), cfg.cubature.eps.begin());
    }
    if (c.contains("c")) {
      read(c, "c", v, "cubature");
      if (v.size() != 3) throw InputError("cubature.c needs 3 values");
      std::copy(v.begin(), v.end(), cfg.cubature.c.begin());
    }
    read(c, "k_max", cfg.cubature.k_max, "cubature");
  }
  for (double e : cfg.cubature.eps)
    if (!(e > 0)) throw InputError("cubature tolerances must be positive");
  for (double c : cfg.cubature.c)
    if (!(c > 0)) throw InputError("cubature weights must be positive");
  if (cfg.cubature.k_max < 0) throw InputError("cubature.k_max must be non-negative");

  if (j.contains("macro")) {
    const json& m = j["macro"];
    check_keys(m, "macro",
               {"width", "height", "nx", "ny", "zeta", "strain", "perturb", "steps", "max_cuts", "max_iterations",
                "rel_tol"});
    read(m, "width", cfg.plate.width, "macro");
    read(m, "height", cfg.plate.height, "macro");
    read(m, "nx", cfg.plate.nx, "macro");
    read(m, "ny", cfg.plate.ny, "macro");
    read(m, "zeta", cfg.plate.zeta, "macro");
    read(m, "strain", cfg.plate.strain, "macro");
    read(m, "perturb", cfg.plate.perturb, "macro");
    read(m, "steps", cfg.macro.steps, "macro");
    read(m, "max_cuts", cfg.macro.max_cuts, "macro");
    read(m, "max_iterations", cfg.macro.max_iterations, "macro");
    read(m, "rel_tol", cfg.macro.rel_tol, "macro");
  }
  if (!(cfg.plate.width > 0 && cfg.plate.height > 0) || cfg.plate.nx < 1 || cfg.plate.ny < 1)
    throw InputError("macro plate needs positive sizes");
  if (cfg.macro.steps < 1 || cfg.macro.max_cuts < 0 || cfg.macro.max_iterations < 1)
    throw InputError("macro step controls out of range");

  if (j.contains("paths")) {
    const json& p = j["paths"];
    check_keys(p, "paths", {"store", "artifact", "output"});
    std::string s;
    if (p.contains("store")) read(p, "store", s, "paths"), cfg.store = s;
    if (p.contains("artifact")) read(p, "artifact", s, "paths"), cfg.artifact = s;
    if (p.contains("output")) read(p, "output", s, "paths"), cfg.output = s;
  }
  cfg.store = resolve(base, cfg.store);
  cfg.artifact = resolve(base, cfg.artifact);
  cfg.output = resolve(base, cfg.output);

  read(j, "threads", cfg.threads, "config");
  if (cfg.threads < 1) throw InputError("threads must be at least 1");
  cfg.macro.threads = cfg.threads;
  cfg.hash = hex64(fnv1a(cfg.dump()));
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("config file not found: " + path.string());
  return parse_config(read_text(path), path.parent_path().empty() ? "." : path.parent_path());
}

std::string RunConfig::dump() const {
  json groups = json::array();
  for (const auto& g : sampling.groups) groups.push_back({{"zeta", g.zeta}, {"count", g.count}});
  const auto vec = [](const auto& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json j = {
      {"schema_version", kSchemaVersion},
      {"material", {{"c1", material.c1}, {"c2", material.c2}, {"bulk", material.bulk}}},
      {"geometry", {{"mesh", mesh.filename().string()}}},
      {"sampling",
       {{"groups", groups},
        {"loadsteps", sampling.loadsteps},
        {"seed", sampling.seed},
        {"bounds",
         {{"f_lo", vec(sampling.bounds.f_lo)},
          {"f_hi", vec(sampling.bounds.f_hi)},
          {"g_lo", vec(sampling.bounds.g_lo)},
          {"g_hi", vec(sampling.bounds.g_hi)}}}}},
      {"pod", {{"w", pod_json(pod_w)}, {"y", pod_json(pod_y)}, {"yh", pod_json(pod_yh)}}},
      {"cubature", {{"eps", cubature.eps}, {"c", cubature.c}, {"k_max", cubature.k_max}}},
      {"macro",
       {{"width", plate.width},
        {"height", plate.height},
        {"nx", plate.nx},
        {"ny", plate.ny},
        {"zeta", plate.zeta},
        {"strain", plate.strain},
        {"perturb", plate.perturb},
        {"steps", macro.steps},
        {"max_cuts", macro.max_cuts},
        {"max_iterations", macro.max_iterations},
        {"rel_tol", macro.rel_tol}}},
      {"threads", threads}};
  return j.dump(2);
}

}  // namespace homog2
