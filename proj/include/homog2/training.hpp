#pragma once

// Offline stage: bases, cubature and the ROM artifact from a snapshot set.

#include "homog2/cubature.hpp"
#include "homog2/pod.hpp"
#include "homog2/rom.hpp"
#include "homog2/snapshots.hpp"

#include <string>

namespace homog2 {

struct TrainingSettings {
  PodCriterion w = PodCriterion::energy(1e-5);
  PodCriterion y = PodCriterion::energy(5e-3);
  PodCriterion yh = PodCriterion::energy(5e-3);
  CubatureConfig cubature;
  MaterialParams params;
  std::string provenance = "{}";
};

struct TrainingResult {
  RomArtifact artifact;
  CubatureSystem system;

  int n() const { return artifact.w.rank(); }
  int m() const { return artifact.y.rank(); }
  int l() const { return artifact.yh.rank(); }
  int q() const { return artifact.scheme.size(); }
  bool converged() const { return artifact.scheme.converged; }
};

/// `mesh_json` is the parent mesh file content embedded in the artifact.
TrainingResult train_rom(const std::string& mesh_json, const SnapshotSet& snapshots, const TrainingSettings& settings);

}  // namespace homog2
