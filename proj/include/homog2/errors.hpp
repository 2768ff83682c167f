#pragma once

#include <stdexcept>
#include <string>

namespace homog2 {

/// Malformed or inconsistent input files (meshes, configs, artifacts).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid geometry parameter (transformation map not injective enough).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear or nonlinear solver failure.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deformation gradient left the admissible set (det F <= 0).
class InadmissibleState : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace homog2
