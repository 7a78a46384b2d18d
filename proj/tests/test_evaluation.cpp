#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "test_util.hpp"

using namespace stsgcn;
using testutil::random_tensor;

namespace {

constexpr double kPi = std::numbers::pi;

double at(const Tensor<double>& t, std::size_t b, std::size_t d, std::size_t v, std::size_t k) {
  return t[((b * 3 + d) * t.dim(2) + v) * t.dim(3) + k];
}

Mat3 axis_rotation(int axis, double a) {
  const double c = std::cos(a), s = std::sin(a);
  if (axis == 0) return {1, 0, 0, 0, c, -s, 0, s, c};
  if (axis == 1) return {c, 0, s, 0, 1, 0, -s, 0, c};
  return {c, -s, 0, s, c, 0, 0, 0, 1};
}

double mat_diff(const Mat3& a, const Mat3& b) {
  double m = 0.0;
  for (int i = 0; i < 9; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Horizons, DefaultFramesAndMilliseconds) {
  const auto h = default_horizons(25);
  EXPECT_EQ(h, (std::vector<std::size_t>{2, 4, 8, 10, 14, 18, 22, 25}));
  std::vector<double> ms;
  for (std::size_t f : h) ms.push_back(make_horizon(f, 25).ms);
  EXPECT_EQ(ms, (std::vector<double>{80, 160, 320, 400, 560, 720, 880, 1000}));
}

TEST(Horizons, ClippedToShortHorizon) {
  EXPECT_EQ(default_horizons(10), (std::vector<std::size_t>{2, 4, 8, 10}));
  EXPECT_EQ(default_horizons(1), (std::vector<std::size_t>{1}));
}

TEST(Horizons, OutOfRangeRejected) {
  Tensor<double> p({1, 3, 2, 4});
  EXPECT_THROW(mpjpe_at_horizons(p, p, {5}), ConfigError);
  EXPECT_THROW(mpjpe_at_horizons(p, p, {0}), ConfigError);
  EXPECT_THROW(mae_at_horizons(p, p, {5}), ConfigError);
  EXPECT_THROW(make_horizon(2, 0), ConfigError);
}

TEST(Mpjpe, MatchesPerFrameOracle) {
  std::mt19937_64 g(1);
  const std::size_t B = 3, V = 4, K = 6;
  auto p = random_tensor(g, {B, 3, V, K}, -10, 10);
  auto t = random_tensor(g, {B, 3, V, K}, -10, 10);
  const std::vector<std::size_t> hs{1, 3, 6};
  const auto got = mpjpe_at_horizons(p, t, hs);
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const std::size_t k = hs[i] - 1;
    double acc = 0.0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t v = 0; v < V; ++v)
        acc += std::hypot(at(p, b, 0, v, k) - at(t, b, 0, v, k), at(p, b, 1, v, k) - at(t, b, 1, v, k),
                          at(p, b, 2, v, k) - at(t, b, 2, v, k));
    EXPECT_NEAR(got[i], acc / (B * V), 1e-12);
  }
}

TEST(Mpjpe, OnlyTheSelectedFrameMatters) {
  Tensor<double> p({1, 3, 1, 3}), t({1, 3, 1, 3});
  p[0] = 100.0;  // frame 1, x
  p[2] = 3.0;    // frame 3, x
  p[8] = 4.0;    // frame 3, z
  const auto got = mpjpe_at_horizons(p, t, {1, 2, 3});
  EXPECT_DOUBLE_EQ(got[0], 100.0);
  EXPECT_DOUBLE_EQ(got[1], 0.0);
  EXPECT_DOUBLE_EQ(got[2], 5.0);
}

TEST(Mpjpe, InvariantToSharedTranslationAndJointPermutation) {
  std::mt19937_64 g(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t B = testutil::rand_between(g, 1, 3), V = testutil::rand_between(g, 1, 6), K = 4;
    auto p = random_tensor(g, {B, 3, V, K}, -50, 50);
    auto t = random_tensor(g, {B, 3, V, K}, -50, 50);
    std::vector<std::size_t> perm(V);
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), g);
    std::uniform_real_distribution<double> u(-100, 100);
    const double shift[3] = {u(g), u(g), u(g)};
    Tensor<double> p2(p.shape()), t2(t.shape());
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t d = 0; d < 3; ++d)
        for (std::size_t v = 0; v < V; ++v)
          for (std::size_t k = 0; k < K; ++k) {
            const std::size_t dst = ((b * 3 + d) * V + v) * K + k;
            p2[dst] = at(p, b, d, perm[v], k) + shift[d];
            t2[dst] = at(t, b, d, perm[v], k) + shift[d];
          }
    const auto a = mpjpe_at_horizons(p, t, {1, 2, 3, 4}), c = mpjpe_at_horizons(p2, t2, {1, 2, 3, 4});
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a[i], c[i], 1e-9);
  }
}

TEST(Rotation, ExpmapGivesProperRotation) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(-4, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat3 R = expmap_to_rotmat({u(g), u(g), u(g)});
    EXPECT_LT(mat_diff(matmul3(transpose3(R), R), kIdentity3), 1e-12);
    EXPECT_NEAR(det3(R), 1.0, 1e-12);
  }
}

TEST(Rotation, ExpmapAboutZMatchesAxisRotation) {
  EXPECT_LT(mat_diff(expmap_to_rotmat({0, 0, 0.7}), axis_rotation(2, 0.7)), 1e-15);
  EXPECT_LT(mat_diff(expmap_to_rotmat({-1.1, 0, 0}), axis_rotation(0, -1.1)), 1e-15);
  EXPECT_EQ(expmap_to_rotmat({0, 0, 0}), kIdentity3);
}

TEST(Rotation, EulerComposesZThenYThenX) {
  const Vec3 e{0.3, -0.4, 1.2};
  const Mat3 ref = matmul3(axis_rotation(2, e[0]), matmul3(axis_rotation(1, e[1]), axis_rotation(0, e[2])));
  EXPECT_LT(mat_diff(euler_zyx_to_rotmat(e), ref), 1e-15);
}

TEST(Rotation, EulerRoundTripAwayFromGimbalLock) {
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> full(-kPi + 1e-6, kPi - 1e-6), half(-kPi / 2 + 1e-3, kPi / 2 - 1e-3);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec3 e{full(g), half(g), full(g)};
    const Vec3 back = rotmat_to_euler(euler_zyx_to_rotmat(e));
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(back[i], e[i], 1e-8);
  }
}

TEST(Rotation, GimbalLockPinsXAndPreservesMatrix) {
  for (double y : {kPi / 2, -kPi / 2}) {
    const Mat3 R = euler_zyx_to_rotmat({0.5, y, 0.2});
    const Vec3 e = rotmat_to_euler(R);
    EXPECT_EQ(e[2], 0.0);
    EXPECT_NEAR(e[1], y, 1e-12);
    EXPECT_LT(mat_diff(euler_zyx_to_rotmat(e), R), 1e-9);
  }
}

TEST(Rotation, NonRotationRejected) {
  EXPECT_THROW(rotmat_to_euler({2, 0, 0, 0, 1, 0, 0, 0, 1}), DataError);
  EXPECT_THROW(rotmat_to_euler({-1, 0, 0, 0, 1, 0, 0, 0, 1}), DataError);
}

TEST(Mae, InvariantToFullTurnReparameterization) {
  // r and r + 2*pi*r/|r| encode the same rotation, so the angle error must not change.
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_tensor(g, {2, 3, 3, 2}, -1.2, 1.2);
    auto t = random_tensor(g, {2, 3, 3, 2}, -1.2, 1.2);
    Tensor<double> p2 = p.clone();
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t v = 0; v < 3; ++v)
        for (std::size_t k = 0; k < 2; ++k) {
          double n = 0.0;
          for (std::size_t d = 0; d < 3; ++d) n += at(p, b, d, v, k) * at(p, b, d, v, k);
          n = std::sqrt(n);
          if (n < 1e-6) continue;
          for (std::size_t d = 0; d < 3; ++d) p2[((b * 3 + d) * 3 + v) * 2 + k] *= (n + 2 * kPi) / n;
        }
    const auto a = mae_at_horizons(p, t, {1, 2}), c = mae_at_horizons(p2, t, {1, 2});
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(a[i], c[i], 1e-9);
  }
}

TEST(Mae, SingleAxisRotationErrorIsAngleDifference) {
  Tensor<double> p({1, 3, 1, 1}), t({1, 3, 1, 1});
  p[2] = 0.5;  // z-axis rotation by 0.5 rad
  t[2] = 0.2;
  EXPECT_NEAR(mae_at_horizons(p, t, {1})[0], 0.3 / 3.0, 1e-12);
  EXPECT_NEAR(mae_at_horizons(p, p, {1})[0], 0.0, 1e-15);
}

TEST(ZeroVelocity, RepeatsLastObservedFrame) {
  std::mt19937_64 g(6);
  auto X = random_tensor(g, {2, 3, 4, 5});
  auto Z = zero_velocity_baseline(X, 7);
  ASSERT_EQ(Z.shape(), (Shape{2, 3, 4, 7}));
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t d = 0; d < 3; ++d)
      for (std::size_t v = 0; v < 4; ++v)
        for (std::size_t k = 0; k < 7; ++k) EXPECT_EQ(at(Z, b, d, v, k), at(X, b, d, v, 4));
}

TEST(ZeroVelocity, ExactOnStaticMotion) {
  Tensor<double> X = Tensor<double>::full({1, 3, 2, 4}, 1.5);
  auto Z = zero_velocity_baseline(X, 3);
  Tensor<double> T = Tensor<double>::full({1, 3, 2, 3}, 1.5);
  for (double e : mpjpe_at_horizons(Z, T, {1, 2, 3})) EXPECT_EQ(e, 0.0);
  EXPECT_THROW(zero_velocity_baseline(X, 0), ConfigError);
}

TEST(EvalReport, CsvAndTableLayout) {
  EvalReport r;
  r.metric = "mpjpe";
  r.unit = "mm";
  r.variant = "separable";
  r.windows = 12;
  r.parameter_count = 39079;
  for (std::size_t f : {2, 4}) r.horizons.push_back(make_horizon(f, 25));
  r.model = {1.0, 3.0};
  r.baseline = {2.0, 6.0};
  const std::string csv = r.to_csv();
  EXPECT_EQ(csv,
            "frame,ms,mpjpe_model,mpjpe_zero_velocity\n"
            "2,80,1,2\n"
            "4,160,3,6\n"
            "average,,2,4\n");
  const std::string table = r.to_table();
  EXPECT_NE(table.find("mpjpe (mm), variant separable, 12 windows, 39079 parameters"), std::string::npos);
  EXPECT_NE(table.find("msec"), std::string::npos);
  EXPECT_NE(table.find("zero-velocity"), std::string::npos);
  EXPECT_NE(table.find("160"), std::string::npos);
}
