#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "test_util.hpp"

using namespace stsgcn;
using testutil::max_abs_diff;
using testutil::rand_between;
using testutil::random_tensor;

// ---- Tensor -----------------------------------------------------------------

TEST(Tensor, ZeroFilledWithShape) {
  Tensor<double> t({2, 3, 4});
  EXPECT_EQ(t.numel(), 24u);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_EQ(t.dim(1), 3u);
  for (double x : t.data()) EXPECT_EQ(x, 0.0);
  EXPECT_FALSE(t.requires_grad());
}

TEST(Tensor, ZeroExtentRejected) {
  EXPECT_THROW(Tensor<double>({2, 0, 3}), DimensionError);
}

TEST(Tensor, ValueCountMustMatchShape) {
  EXPECT_THROW(Tensor<double>({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  Tensor<double> t({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(t[3], 4.0);
}

TEST(Tensor, CopiesShareStorageClonesDoNot) {
  Tensor<double> a({3});
  Tensor<double> b = a;
  Tensor<double> c = a.clone();
  b[0] = 5.0;
  EXPECT_EQ(a[0], 5.0);
  EXPECT_EQ(c[0], 0.0);
  EXPECT_TRUE(a.shares_storage(b));
  EXPECT_FALSE(a.shares_storage(c));
}

TEST(Tensor, ItemRequiresSingleElement) {
  EXPECT_EQ(Tensor<double>::scalar(2.5).item(), 2.5);
  EXPECT_THROW(Tensor<double>({2}).item(), DimensionError);
}

TEST(Tensor, CastPreservesShapeAndValues) {
  Tensor<double> a({2, 2}, {0.5, -1.25, 3.0, 4.0}, true);
  Tensor<float> f = a.cast<float>();
  EXPECT_EQ(f.shape(), a.shape());
  EXPECT_TRUE(f.requires_grad());
  EXPECT_FLOAT_EQ(f[1], -1.25f);
}

TEST(Tensor, AllFiniteDetectsNan) {
  Tensor<double> a({2});
  EXPECT_TRUE(a.all_finite());
  a[1] = std::nan("");
  EXPECT_FALSE(a.all_finite());
}

// ---- Tape -------------------------------------------------------------------

TEST(Tape, BackwardReplaysInExactReverseOrder) {
  Tape<double> tape;
  tape.retain_intermediate_grads(true);
  Tensor<double> x({2}, {1.0, 2.0}, true);
  Tensor<double> loss = sum(tape, x);
  std::vector<int> order;
  for (int i = 0; i < 5; ++i) tape.record("probe" + std::to_string(i), loss, [&order, i]() { order.push_back(i); });
  tape.backward(loss);
  EXPECT_EQ(order, (std::vector<int>{4, 3, 2, 1, 0}));
  EXPECT_EQ(x.grad()[0], 1.0);
}

TEST(Tape, SecondBackwardThrows) {
  Tape<double> tape;
  Tensor<double> x({2}, {1.0, 2.0}, true);
  Tensor<double> loss = sum(tape, mul(tape, x, x));
  tape.backward(loss);
  EXPECT_EQ(x.grad()[1], 4.0);
  EXPECT_THROW(tape.backward(loss), AutodiffError);
}

TEST(Tape, NonScalarLossRejected) {
  Tape<double> tape;
  Tensor<double> x({2}, {1.0, 2.0}, true);
  Tensor<double> y = mul(tape, x, x);
  EXPECT_THROW(tape.backward(y), AutodiffError);
}

TEST(Tape, EmptyTapeRejected) {
  Tape<double> tape;
  EXPECT_THROW(tape.backward(Tensor<double>::scalar(1.0, true)), AutodiffError);
}

TEST(Tape, NonRecordingTapeKeepsNothing) {
  Tape<double> tape(false);
  Tensor<double> x({3}, {1, 2, 3}, true);
  Tensor<double> y = sum(tape, mul(tape, x, x));
  EXPECT_EQ(tape.size(), 0u);
  EXPECT_FALSE(y.requires_grad());
  EXPECT_DOUBLE_EQ(y.item(), 14.0);
}

TEST(Tape, LeafGradientsAccumulateAcrossTapes) {
  Tensor<double> x({1}, {3.0}, true);
  for (int i = 0; i < 2; ++i) {
    Tape<double> tape;
    tape.backward(sum(tape, mul(tape, x, x)));
  }
  EXPECT_DOUBLE_EQ(x.grad()[0], 12.0);
  x.zero_grad();
  EXPECT_DOUBLE_EQ(x.grad()[0], 0.0);
}

TEST(Tape, DiamondGraphSumsBothPaths) {
  // f = sum(x*x + x) -> df/dx = 2x + 1
  Tape<double> tape;
  Tensor<double> x({2}, {1.5, -2.0}, true);
  tape.backward(sum(tape, add(tape, mul(tape, x, x), x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 4.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], -3.0);
}

// ---- Contractions -----------------------------------------------------------

TEST(Contract, TimeMatchesNestedLoops) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t B = rand_between(rng, 1, 3), C = rand_between(rng, 1, 4), V = rand_between(rng, 1, 5),
                      T = rand_between(rng, 1, 6);
    auto At = random_tensor(rng, {V, T, T});
    auto H = random_tensor(rng, {B, C, V, T});
    Tape<double> tape(false);
    EXPECT_LE(max_abs_diff(contract_time(tape, At, H), testutil::ref_time(At, H)), 1e-12);
  }
}

TEST(Contract, SpaceMatchesNestedLoops) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t B = rand_between(rng, 1, 3), C = rand_between(rng, 1, 4), V = rand_between(rng, 1, 5),
                      T = rand_between(rng, 1, 6);
    auto As = random_tensor(rng, {T, V, V});
    auto H = random_tensor(rng, {B, C, V, T});
    Tape<double> tape(false);
    EXPECT_LE(max_abs_diff(contract_space(tape, As, H), testutil::ref_space(As, H)), 1e-12);
  }
}

TEST(Contract, FullMatchesNestedLoops) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t B = rand_between(rng, 1, 3), C = rand_between(rng, 1, 3), V = rand_between(rng, 1, 4),
                      T = rand_between(rng, 1, 4);
    auto Ast = random_tensor(rng, {V, T, V, T});
    auto H = random_tensor(rng, {B, C, V, T});
    Tape<double> tape(false);
    EXPECT_LE(max_abs_diff(contract_full(tape, Ast, H), testutil::ref_full(Ast, H)), 1e-12);
  }
}

TEST(Contract, IdentityAdjacencyIsIdentity) {
  const std::size_t V = 3, T = 4;
  Tensor<double> At({V, T, T}), As({T, V, V});
  for (std::size_t v = 0; v < V; ++v)
    for (std::size_t k = 0; k < T; ++k) At[(v * T + k) * T + k] = 1.0;
  for (std::size_t k = 0; k < T; ++k)
    for (std::size_t v = 0; v < V; ++v) As[(k * V + v) * V + v] = 1.0;
  std::mt19937_64 rng(4);
  auto H = random_tensor(rng, {2, 3, V, T});
  Tape<double> tape(false);
  EXPECT_EQ(max_abs_diff(contract_time(tape, At, H), H), 0.0);
  EXPECT_EQ(max_abs_diff(contract_space(tape, As, H), H), 0.0);
}

TEST(Contract, LinearInActivation) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t V = rand_between(rng, 1, 4), T = rand_between(rng, 1, 4);
    auto At = random_tensor(rng, {V, T, T});
    auto As = random_tensor(rng, {T, V, V});
    auto H1 = random_tensor(rng, {2, 2, V, T});
    auto H2 = random_tensor(rng, {2, 2, V, T});
    const double a = std::uniform_real_distribution<double>(-2, 2)(rng);
    Tensor<double> mix({2, 2, V, T});
    for (std::size_t i = 0; i < mix.numel(); ++i) mix[i] = a * H1[i] + H2[i];
    Tape<double> tape(false);
    auto f = [&](const Tensor<double>& H) { return contract_space(tape, As, contract_time(tape, At, H)); };
    Tensor<double> lhs = f(mix), y1 = f(H1), y2 = f(H2);
    double err = 0.0;
    for (std::size_t i = 0; i < lhs.numel(); ++i) err = std::max(err, std::abs(lhs[i] - (a * y1[i] + y2[i])));
    EXPECT_LE(err, 1e-12);
  }
}

TEST(Contract, FactorizedEqualsComposedFull) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t V = rand_between(rng, 1, 4), T = rand_between(rng, 1, 4);
    auto As = random_tensor(rng, {T, V, V});
    auto At = random_tensor(rng, {V, T, T});
    auto H = random_tensor(rng, {2, 3, V, T});
    Tape<double> tape(false);
    Tensor<double> sep = contract_space(tape, As, contract_time(tape, At, H));
    Tensor<double> full = contract_full(tape, testutil::compose_adjacency(As, At), H);
    EXPECT_LE(max_abs_diff(sep, full), 1e-12);
  }
}

TEST(Contract, TimeRejectsMismatchedFrames) {
  Tape<double> tape(false);
  try {
    contract_time(tape, Tensor<double>({5, 10, 10}), Tensor<double>({1, 3, 5, 8}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("frame"), std::string::npos) << e.what();
  }
}

TEST(Contract, SpaceRejectsMismatchedJoints) {
  Tape<double> tape(false);
  try {
    contract_space(tape, Tensor<double>({4, 6, 6}), Tensor<double>({1, 3, 5, 4}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("joint"), std::string::npos) << e.what();
  }
}

// ---- Channel ops ------------------------------------------------------------

TEST(LinearChannels, MatchesPerSiteMatmul) {
  std::mt19937_64 rng(7);
  auto H = random_tensor(rng, {2, 3, 4, 5});
  auto W = random_tensor(rng, {3, 6});
  Tape<double> tape(false);
  Tensor<double> out = linear_channels(tape, H, W);
  ASSERT_EQ(out.shape(), (Shape{2, 6, 4, 5}));
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t o = 0; o < 6; ++o)
      for (std::size_t s = 0; s < 20; ++s) {
        double ref = 0.0;
        for (std::size_t c = 0; c < 3; ++c) ref += H[(b * 3 + c) * 20 + s] * W[c * 6 + o];
        EXPECT_NEAR(out[(b * 6 + o) * 20 + s], ref, 1e-12);
      }
}

TEST(LinearChannels, RejectsChannelMismatch) {
  Tape<double> tape(false);
  EXPECT_THROW(linear_channels(tape, Tensor<double>({1, 3, 2, 2}), Tensor<double>({4, 2})), DimensionError);
}

TEST(Prelu, PositivePassNegativeScaled) {
  Tape<double> tape(false);
  Tensor<double> H({4}, {-2.0, -0.5, 0.0, 3.0});
  Tensor<double> out = prelu(tape, H, Tensor<double>::scalar(0.25));
  EXPECT_EQ(out[0], -0.5);
  EXPECT_EQ(out[1], -0.125);
  EXPECT_EQ(out[2], 0.0);
  EXPECT_EQ(out[3], 3.0);
}

TEST(BatchNorm, TrainModeNormalizesPerChannel) {
  std::mt19937_64 rng(8);
  auto H = random_tensor(rng, {4, 2, 3, 5}, -3.0, 7.0);
  auto stats = BatchNormStats<double>::make(2);
  Tape<double> tape(false);
  Tensor<double> out =
      batch_norm(tape, H, Tensor<double>::full({2}, 1.0), Tensor<double>::zeros({2}), stats, true);
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t s = 0; s < 15; ++s) mean += out[(b * 2 + c) * 15 + s];
    mean /= 60.0;
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t s = 0; s < 15; ++s) sq += std::pow(out[(b * 2 + c) * 15 + s] - mean, 2);
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(sq / 60.0, 1.0, 1e-3);  // eps in the denominator
  }
}

TEST(BatchNorm, RunningStatsFollowMomentumAndUnbiasedVariance) {
  Tensor<double> H({2, 1, 1, 2}, {1.0, 3.0, 5.0, 7.0});
  auto stats = BatchNormStats<double>::make(1);
  Tape<double> tape(false);
  batch_norm(tape, H, Tensor<double>::full({1}, 1.0), Tensor<double>::zeros({1}), stats, true);
  // batch mean 4, unbiased variance 20/3
  EXPECT_NEAR(stats.mean[0], 0.1 * 4.0, 1e-12);
  EXPECT_NEAR(stats.var[0], 0.9 * 1.0 + 0.1 * 20.0 / 3.0, 1e-12);
}

TEST(BatchNorm, EvalModeIsAffineWithRunningStats) {
  auto stats = BatchNormStats<double>::make(1);
  stats.mean[0] = 2.0;
  stats.var[0] = 4.0;
  Tensor<double> H({1, 1, 1, 2}, {2.0, 6.0});
  Tape<double> tape(false);
  Tensor<double> out =
      batch_norm(tape, H, Tensor<double>::full({1}, 3.0), Tensor<double>::full({1}, 1.0), stats, false);
  EXPECT_NEAR(out[0], 1.0, 1e-12);
  EXPECT_NEAR(out[1], 3.0 * 4.0 / std::sqrt(4.0 + 1e-5) + 1.0, 1e-12);
  EXPECT_EQ(stats.mean[0], 2.0);
}

// ---- conv2d -----------------------------------------------------------------

TEST(Conv2d, MatchesBruteForce) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t B = rand_between(rng, 1, 2), Ci = rand_between(rng, 1, 4), Co = rand_between(rng, 1, 4),
                      P = rand_between(rng, 1, 5), Q = rand_between(rng, 1, 6);
    auto H = random_tensor(rng, {B, Ci, P, Q});
    auto Kr = random_tensor(rng, {Co, Ci, 3, 3});
    auto bias = random_tensor(rng, {Co});
    Tape<double> tape(false);
    EXPECT_LE(max_abs_diff(conv2d(tape, H, Kr, bias), testutil::ref_conv(H, Kr, bias)), 1e-12);
  }
}

TEST(Conv2d, CenterTapKernelIsScaledIdentity) {
  std::mt19937_64 rng(10);
  auto H = random_tensor(rng, {1, 1, 3, 4});
  Tensor<double> Kr({1, 1, 3, 3});
  Kr[4] = 2.0;
  Tape<double> tape(false);
  Tensor<double> out = conv2d(tape, H, Kr, Tensor<double>::zeros({1}));
  for (std::size_t i = 0; i < H.numel(); ++i) EXPECT_DOUBLE_EQ(out[i], 2.0 * H[i]);
}

TEST(Conv2d, RejectsEvenKernel) {
  Tape<double> tape(false);
  EXPECT_THROW(conv2d(tape, Tensor<double>({1, 1, 3, 3}), Tensor<double>({1, 1, 2, 2}), Tensor<double>({1})),
               DimensionError);
}

// ---- permute ----------------------------------------------------------------

TEST(Permute, MovesAxesAndRoundTrips) {
  std::mt19937_64 rng(11);
  auto H = random_tensor(rng, {2, 3, 4, 5});
  Tape<double> tape(false);
  Tensor<double> P = permute(tape, H, {0, 3, 1, 2});
  ASSERT_EQ(P.shape(), (Shape{2, 5, 3, 4}));
  EXPECT_EQ(P[((1 * 5 + 4) * 3 + 2) * 4 + 3], H[((1 * 3 + 2) * 4 + 3) * 5 + 4]);
  Tensor<double> back = permute(tape, P, {0, 2, 3, 1});
  EXPECT_EQ(max_abs_diff(back, H), 0.0);
}

TEST(Permute, RejectsNonPermutation) {
  Tape<double> tape(false);
  EXPECT_THROW(permute(tape, Tensor<double>({2, 3}), {0, 0}), DimensionError);
}

// ---- gradients --------------------------------------------------------------

TEST(GradCheck, EveryOpAgreesWithFiniteDifferences) {
  std::mt19937_64 rng(12);
  auto H = random_tensor(rng, {2, 2, 3, 4});
  auto At = random_tensor(rng, {3, 4, 4});
  auto As = random_tensor(rng, {4, 3, 3});
  auto Ast = random_tensor(rng, {3, 4, 3, 4});
  auto W = random_tensor(rng, {2, 3});
  auto slope = Tensor<double>::scalar(0.3);
  auto scale = random_tensor(rng, {3}, 0.5, 1.5);
  auto shift = random_tensor(rng, {3});
  auto Kr = random_tensor(rng, {2, 4, 3, 3});
  auto bias = random_tensor(rng, {2});
  auto weights = random_tensor(rng, {2, 2, 3, 3});
  auto stats = BatchNormStats<double>::make(3);

  auto loss_fn = [&](Tape<double>& tape) {
    Tensor<double> a = contract_space(tape, As, contract_time(tape, At, H));
    Tensor<double> b = add(tape, a, contract_full(tape, Ast, H));
    Tensor<double> c = linear_channels(tape, b, W);
    auto st = stats.clone();
    Tensor<double> d = prelu(tape, batch_norm(tape, c, scale, shift, st, true), slope);
    Tensor<double> e = conv2d(tape, permute(tape, d, {0, 3, 1, 2}), Kr, bias);
    return sum(tape, mul(tape, e, weights));
  };
  auto r = grad_check(loss_fn, {H, At, As, Ast, W, slope, scale, shift, Kr, bias});
  EXPECT_LT(r.max_relative_error, 1e-6) << "param " << r.worst_param << " index " << r.worst_index;
  EXPECT_GT(r.checked, 100u);
}

TEST(GradCheck, DetectsAWrongGradient) {
  // A deliberately broken op: forward x*x, backward claims 3x.
  Tensor<double> x({2}, {0.7, -1.1});
  auto broken = [&](Tape<double>& tape) {
    Tensor<double> out({2}, {x[0] * x[0], x[1] * x[1]}, tape.recording());
    tape.record("broken", out, [x, out]() {
      for (std::size_t i = 0; i < 2; ++i) x.grad_buffer()[i] += 3.0 * x[i] * out.grad()[i];
    });
    return sum(tape, out);
  };
  EXPECT_GT(grad_check(broken, {x}).max_relative_error, 0.1);
}

TEST(GradCheck, RejectsNonPositiveEpsilon) {
  Tensor<double> x({1}, std::vector<double>{1.0});
  GradCheckOptions o;
  o.eps = 0.0;
  EXPECT_THROW(grad_check([&](Tape<double>& t) { return sum(t, x); }, {x}, o), AutodiffError);
}

TEST(Random, Uniform01InOpenUnitInterval) {
  Rng rng(42);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Random, SameSeedSameStream) {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}
