#include "homog2/io.hpp"

#include "homog2/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace homog2 {

static_assert(std::endian::native == std::endian::little, "raw arrays are stored little-endian");

void append_f64(std::string& buffer, const Eigen::MatrixXd& m) {
  const std::size_t bytes = static_cast<std::size_t>(m.size()) * sizeof(double);
  const std::size_t start = buffer.size();
  buffer.resize(start + bytes);
  if (bytes) std::memcpy(buffer.data() + start, m.data(), bytes);
}

Eigen::MatrixXd take_f64(std::string_view& buffer, Eigen::Index rows, Eigen::Index cols) {
  const std::size_t bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
  if (buffer.size() < bytes) throw InputError("binary block truncated");
  Eigen::MatrixXd m(rows, cols);
  if (bytes) std::memcpy(m.data(), buffer.data(), bytes);
  buffer.remove_prefix(bytes);
  return m;
}

void write_f64(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::string buf;
  append_f64(buf, m);
  write_text(path, buf);
}

Eigen::MatrixXd read_f64(const std::filesystem::path& path, Eigen::Index rows, Eigen::Index cols) {
  const std::string data = read_text(path);
  if (data.size() != static_cast<std::size_t>(rows * cols) * sizeof(double))
    throw InputError(path.string() + ": expected " + std::to_string(rows * cols) + " float64 values, file has " +
                     std::to_string(data.size()) + " bytes");
  std::string_view view(data);
  return take_f64(view, rows, cols);
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::string fmt17(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw InputError("write failed for " + path.string());
}

}  // namespace homog2
