#pragma once

// Run configuration: one JSON file drives sampling, training and macro runs.

#include "homog2/cubature.hpp"
#include "homog2/macro.hpp"
#include "homog2/material.hpp"
#include "homog2/pod.hpp"
#include "homog2/snapshots.hpp"

#include <filesystem>
#include <string>

namespace homog2 {

struct RunConfig {
  MaterialParams material;
  std::filesystem::path mesh;  // parent RVE mesh
  SamplingPlan sampling;
  PodCriterion pod_w = PodCriterion::energy(1e-5);
  PodCriterion pod_y = PodCriterion::energy(5e-3);
  PodCriterion pod_yh = PodCriterion::energy(5e-3);
  CubatureConfig cubature;
  PlateSpec plate;
  MacroOptions macro;
  std::filesystem::path store = "snapshots";
  std::filesystem::path artifact = "rom.bin";
  std::filesystem::path output = "out";
  int threads = 1;
  std::string hash;  // of the normalized configuration

  /// Normalized JSON with every field explicit.
  std::string dump() const;
};

/// Parses a configuration; relative paths resolve against `base`, and a mesh
/// name not found there falls back to the fixture directory. Unknown keys,
/// wrong types and out-of-range values throw InputError.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base = ".");
RunConfig load_config(const std::filesystem::path& path);

/// Named training presets: paper-N48, paper-N78, paper-N112 fix N and use
/// energy tolerance 5e-3 for the stress bases with eps = 1e-4 everywhere.
void apply_preset(RunConfig& cfg, const std::string& name);

}  // namespace homog2
