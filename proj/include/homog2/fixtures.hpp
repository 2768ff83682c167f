#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

namespace homog2 {

/// Fixture directory: $HOMOG2_FIXTURES if set, else the source tree copy.
inline std::filesystem::path fixture_dir() {
  if (const char* env = std::getenv("HOMOG2_FIXTURES"); env && *env) return env;
#ifdef HOMOG2_DEFAULT_FIXTURES
  return HOMOG2_DEFAULT_FIXTURES;
#else
  return "fixtures";
#endif
}

inline std::filesystem::path fixture_path(const std::string& name) { return fixture_dir() / name; }

}  // namespace homog2
