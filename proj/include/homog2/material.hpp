#pragma once

// Compressible Mooney-Rivlin law in plane strain:
//   W(F) = C1 (I1 - 3) + C2 (I1 - 3)^2 - 2 C1 log J + K/2 (J - 1)^2
// with I1 = tr(F^T F) + 1 (unit out-of-plane stretch) and J = det F.

#include "homog2/errors.hpp"
#include "homog2/tensor.hpp"

#include <cmath>
#include <string>

namespace homog2 {

struct MaterialParams {
  double c1 = 0.55;  // MPa
  double c2 = 0.3;   // MPa
  double bulk = 55.0;  // MPa

  void validate() const {
    if (!(c1 > 0.0) || !(c2 >= 0.0) || !(bulk > 0.0))
      throw InputError("material parameters require C1 > 0, C2 >= 0, K > 0");
  }
};

template <typename Scalar>
using Mat2T = Eigen::Matrix<Scalar, 2, 2>;

namespace detail {
template <typename Scalar>
Scalar checked_det(const Mat2T<Scalar>& f) {
  using std::isfinite;
  const Scalar j = f.determinant();
  if (!(j > Scalar(0)) || !isfinite(j))
    throw InadmissibleState("non-positive det F = " + std::to_string(static_cast<double>(j)));
  return j;
}
}  // namespace detail

template <typename Scalar>
Scalar energy(const Mat2T<Scalar>& f, const MaterialParams& m) {
  using std::log;
  const Scalar j = detail::checked_det(f);
  const Scalar i1m3 = f.squaredNorm() + Scalar(1) - Scalar(3);
  return m.c1 * i1m3 + m.c2 * i1m3 * i1m3 - Scalar(2) * m.c1 * log(j) +
         Scalar(0.5) * m.bulk * (j - Scalar(1)) * (j - Scalar(1));
}

template <typename Scalar>
Mat2T<Scalar> stress(const Mat2T<Scalar>& f, const MaterialParams& m) {
  const Scalar j = detail::checked_det(f);
  const Scalar i1m3 = f.squaredNorm() - Scalar(2);
  const Mat2T<Scalar> finv_t = f.inverse().transpose();
  return (Scalar(2) * m.c1 + Scalar(4) * m.c2 * i1m3) * f +
         (m.bulk * (j - Scalar(1)) * j - Scalar(2) * m.c1) * finv_t;
}

/// Point evaluation of stress and tangent A_ijkl = dP_ij / dF_kl.
struct PointResponse {
  Mat2 stress;
  Mat4 tangent;
};

inline PointResponse stress_and_tangent(const Mat2& f, const MaterialParams& m) {
  const double j = detail::checked_det(f);
  const double i1m3 = f.squaredNorm() - 2.0;
  const Mat2 finv = f.inverse();
  const Mat2 finv_t = finv.transpose();
  const double a = 2.0 * m.c1 + 4.0 * m.c2 * i1m3;
  const double b = m.bulk * (j - 1.0) * j - 2.0 * m.c1;
  const double c = m.bulk * (2.0 * j - 1.0) * j;

  PointResponse out;
  out.stress = a * f + b * finv_t;
  const Vec4 fv = flatten(f);
  const Vec4 gv = flatten(finv_t);
  out.tangent = 8.0 * m.c2 * fv * fv.transpose() + c * gv * gv.transpose();
  for (int i = 0; i < 2; ++i)
    for (int jj = 0; jj < 2; ++jj)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          double v = -b * finv(jj, k) * finv(l, i);
          if (i == k && jj == l) v += a;
          out.tangent(idx2(i, jj), idx2(k, l)) += v;
        }
  return out;
}

inline Mat4 tangent(const Mat2& f, const MaterialParams& m) { return stress_and_tangent(f, m).tangent; }

}  // namespace homog2
