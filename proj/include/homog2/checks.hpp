#pragma once

// Self-checks shared by the verify command and the acceptance runner.

#include "homog2/cubature.hpp"
#include "homog2/material.hpp"
#include "homog2/mesh.hpp"
#include "homog2/micro.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace homog2 {

struct CheckResult {
  std::string name;
  double value = 0.0;  // measured error
  double limit = 0.0;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;
};

/// Formatted PASS/FAIL table.
std::string check_table(const std::vector<CheckResult>& results, bool timings = true);

/// `count` inputs drawn uniformly from the training bounds at one zeta.
std::vector<MacroInput> bounded_inputs(int count, double zeta, std::uint64_t seed);

/// Analytic stress and tangent of `analytic` against central differences of
/// the energy and stress of `reference` at random F near I.
CheckResult check_material(const MaterialParams& reference, const MaterialParams& analytic, int samples,
                           std::uint64_t seed);

/// Zero fluctuation and effective stresses at the identity input.
CheckResult check_stress_free(std::shared_ptr<const Mesh> mesh, const std::vector<double>& zetas,
                              const MaterialParams& params);

/// Effective tangents against central differences of (P, Q) over all ten
/// macro inputs at converged states.
CheckResult check_effective_tangents(std::shared_ptr<const Mesh> mesh, const std::vector<MacroInput>& states,
                                     const MaterialParams& params, double h = 1e-6);

/// Pulled-back solve against a direct solve on the explicitly morphed mesh.
CheckResult check_pullback(std::shared_ptr<const Mesh> mesh, const MacroInput& input, const MaterialParams& params);

/// Effective stress from the stress average against the weighted-stress
/// average.
CheckResult check_weighted_stress(std::shared_ptr<const Mesh> mesh, const std::vector<MacroInput>& states,
                                  const MaterialParams& params);

/// Full-selection residual, block residuals, volume error and NNLS KKT
/// residual of a scheme.
std::vector<CheckResult> check_cubature(const CubatureSystem& sys, const CubatureScheme& scheme);

}  // namespace homog2
