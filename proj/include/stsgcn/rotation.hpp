#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "stsgcn/error.hpp"

namespace stsgcn {

using Mat3 = std::array<double, 9>;  // row-major
using Vec3 = std::array<double, 3>;

inline constexpr Mat3 kIdentity3 = {1, 0, 0, 0, 1, 0, 0, 0, 1};

inline Mat3 matmul3(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
  return r;
}

inline Mat3 transpose3(const Mat3& a) {
  return {a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]};
}

inline double det3(const Mat3& a) {
  return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) + a[2] * (a[3] * a[7] - a[4] * a[6]);
}

/// Rodrigues: R = I + sin(t) K + (1 - cos(t)) K^2 with K the skew matrix of the unit axis.
inline Mat3 expmap_to_rotmat(const Vec3& v) {
  const double theta = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (theta < 1e-12) return kIdentity3;
  const double x = v[0] / theta, y = v[1] / theta, z = v[2] / theta;
  const double s = std::sin(theta), c = 1.0 - std::cos(theta);
  return {1.0 + c * (x * x - 1.0), -s * z + c * x * y,         s * y + c * x * z,
          s * z + c * x * y,       1.0 + c * (y * y - 1.0),    -s * x + c * y * z,
          -s * y + c * x * z,      s * x + c * y * z,          1.0 + c * (z * z - 1.0)};
}

/// R = Rz(angles[0]) * Ry(angles[1]) * Rx(angles[2]).
inline Mat3 euler_zyx_to_rotmat(const Vec3& angles) {
  const double ca = std::cos(angles[0]), sa = std::sin(angles[0]);
  const double cb = std::cos(angles[1]), sb = std::sin(angles[1]);
  const double cc = std::cos(angles[2]), sc = std::sin(angles[2]);
  return {ca * cb, ca * sb * sc - sa * cc, ca * sb * cc + sa * sc,
          sa * cb, sa * sb * sc + ca * cc, sa * sb * cc - ca * sc,
          -sb,     cb * sc,                cb * cc};
}

/// Intrinsic Z-Y-X decomposition, returned as (z, y, x) angles. At gimbal lock
/// (|R[2][0]| >= 1 - 1e-9) the x angle is pinned to 0.
inline Vec3 rotmat_to_euler(const Mat3& R) {
  const Mat3 rtr = matmul3(transpose3(R), R);
  for (int i = 0; i < 9; ++i) {
    if (std::abs(rtr[i] - kIdentity3[i]) > 1e-6) throw DataError("rotmat_to_euler: matrix is not orthonormal");
  }
  if (std::abs(det3(R) - 1.0) > 1e-6) throw DataError("rotmat_to_euler: determinant is not 1");
  const double r20 = R[6];
  if (std::abs(r20) >= 1.0 - 1e-9) {
    const double y = r20 < 0.0 ? std::numbers::pi / 2.0 : -std::numbers::pi / 2.0;
    return {std::atan2(-R[1], R[4]), y, 0.0};
  }
  return {std::atan2(R[3], R[0]), std::asin(std::clamp(-r20, -1.0, 1.0)), std::atan2(R[7], R[8])};
}

}  // namespace stsgcn
