#pragma once

// Small fixed-size tensor conventions shared by every module.
//
//   second order  A_ij    -> Vec4 index 2*i + j        (row-major 2x2)
//   third order   A_ijk   -> Vec8 index 4*i + 2*j + k
//   fourth order  A_ijkl  -> Mat4 (2*i + j, 2*k + l)
//
// The strain-gradient input G_ijk = dF_jk/dx_i is symmetric in (i, k) and is
// stored by its six independent components in the order
//   xxx, xxy, xyx, xyy, yxy, yyy.

#include <Eigen/Dense>

#include <array>

namespace homog2 {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Matrix<double, 4, 1>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat4 = Eigen::Matrix4d;
using Mat48 = Eigen::Matrix<double, 4, 8>;
using Mat84 = Eigen::Matrix<double, 8, 4>;
using Mat46 = Eigen::Matrix<double, 4, 6>;
using Mat86 = Eigen::Matrix<double, 8, 6>;
using Mat88 = Eigen::Matrix<double, 8, 8>;
using Mat68 = Eigen::Matrix<double, 6, 8>;

constexpr int idx2(int i, int j) { return 2 * i + j; }
constexpr int idx3(int i, int j, int k) { return 4 * i + 2 * j + k; }

template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> flatten(const Eigen::Matrix<Scalar, 2, 2>& a) {
  Eigen::Matrix<Scalar, 4, 1> v;
  v << a(0, 0), a(0, 1), a(1, 0), a(1, 1);
  return v;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 2, 2> unflatten(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Matrix<typename Derived::Scalar, 2, 2> a;
  a << v(0), v(1), v(2), v(3);
  return a;
}

/// Full-slot positions of each independent strain-gradient component; the
/// second entry equals the first for the self-symmetric components.
inline constexpr std::array<std::array<int, 2>, 6> kGradSlots{{
    {idx3(0, 0, 0), idx3(0, 0, 0)},
    {idx3(0, 0, 1), idx3(1, 0, 0)},
    {idx3(0, 1, 0), idx3(0, 1, 0)},
    {idx3(0, 1, 1), idx3(1, 1, 0)},
    {idx3(1, 0, 1), idx3(1, 0, 1)},
    {idx3(1, 1, 1), idx3(1, 1, 1)},
}};

inline constexpr std::array<const char*, 6> kGradNames{"xxx", "xxy", "xyx", "xyy", "yxy", "yyy"};

/// Expansion of the six independent components to the full 8-slot tensor.
inline Vec8 expand_gradient(const Vec6& g) {
  Vec8 full = Vec8::Zero();
  for (int s = 0; s < 6; ++s) {
    full(kGradSlots[s][0]) = g(s);
    full(kGradSlots[s][1]) = g(s);
  }
  return full;
}

/// Linear map 8 -> 6 that symmetrizes G_ijk <- (G_ijk + G_kji) / 2 and reads
/// off the independent components. symmetrize_map() * expansion_map() = I.
inline Mat68 symmetrize_map() {
  Mat68 m = Mat68::Zero();
  for (int s = 0; s < 6; ++s) {
    const auto [a, b] = kGradSlots[s];
    if (a == b) {
      m(s, a) = 1.0;
    } else {
      m(s, a) = 0.5;
      m(s, b) = 0.5;
    }
  }
  return m;
}

inline Eigen::Matrix<double, 8, 6> expansion_map() {
  Eigen::Matrix<double, 8, 6> m = Eigen::Matrix<double, 8, 6>::Zero();
  for (int s = 0; s < 6; ++s) {
    m(kGradSlots[s][0], s) = 1.0;
    m(kGradSlots[s][1], s) = 1.0;
  }
  return m;
}

inline Vec6 symmetrize_gradient(const Vec8& full) { return symmetrize_map() * full; }

/// (x . G)_jk = x_i G_ijk for a full-slot G.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> contract_position(const Eigen::Matrix<Scalar, 2, 1>& x, const Vec8& g) {
  Eigen::Matrix<Scalar, 2, 2> out;
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) out(j, k) = x(0) * g(idx3(0, j, k)) + x(1) * g(idx3(1, j, k));
  return out;
}

/// Symmetrized moment 1/2 (P^T (x) x + x (x) P): entry ijk = (P_ji x_k + x_i P_jk) / 2.
inline Vec8 stress_moment(const Mat2& p, const Vec2& x) {
  Vec8 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) out(idx3(i, j, k)) = 0.5 * (p(j, i) * x(k) + x(i) * p(j, k));
  return out;
}

/// Linear map vec(P) -> stress_moment(P, x), as an 8x4 matrix.
inline Mat84 stress_moment_map(const Vec2& x) {
  Mat84 m = Mat84::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        m(idx3(i, j, k), idx2(j, i)) += 0.5 * x(k);
        m(idx3(i, j, k), idx2(j, k)) += 0.5 * x(i);
      }
  return m;
}

/// Right multiplication vec(H) -> vec(H * B) as a 4x4 matrix.
inline Mat4 right_multiply_map(const Mat2& b) {
  Mat4 m = Mat4::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int a = 0; a < 2; ++a) m(idx2(i, j), idx2(i, a)) = b(a, j);
  return m;
}

}  // namespace homog2
