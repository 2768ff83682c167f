#pragma once

// Raw little-endian float64 arrays, hashing and CSV number formatting.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace homog2 {

inline constexpr int kSchemaVersion = 1;

void write_f64(const std::filesystem::path& path, const Eigen::MatrixXd& m);
/// Reads rows x cols values (column-major). Throws InputError on size mismatch.
Eigen::MatrixXd read_f64(const std::filesystem::path& path, Eigen::Index rows, Eigen::Index cols);

void append_f64(std::string& buffer, const Eigen::MatrixXd& m);
Eigen::MatrixXd take_f64(std::string_view& buffer, Eigen::Index rows, Eigen::Index cols);

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 14695981039346656037ull);
std::string hex64(std::uint64_t v);

/// Shortest round-trip formatting (17 significant digits).
std::string fmt17(double v);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace homog2
