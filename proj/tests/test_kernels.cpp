// Copyright 2026 The ftbo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ftbo/kernels.hpp"
#include "ftbo/linalg.hpp"

namespace ftbo {
namespace {

ExpDecayParams decay(double a, double b, double noise = 0.0) { return {a, b, noise}; }

TEST(ExpDecayCov, UnitAtOrigin) {
  for (double a : {0.3, 1.0, 4.0})
    for (double b : {0.1, 0.5, 7.0}) EXPECT_DOUBLE_EQ(exp_decay_cov(0, 0, decay(a, b)), 1.0);
}

TEST(ExpDecayCov, KnownValue) {
  EXPECT_NEAR(exp_decay_cov(1, 1, decay(1.0, 0.5)), 0.2, 1e-15);
  EXPECT_NEAR(exp_decay_cov_quadrature(1, 1, decay(1.0, 0.5), 64), 0.2, 1e-12);
}

TEST(ExpDecayCov, VanishesAtInfinity) {
  EXPECT_LT(exp_decay_cov(1e12, 3.0, decay(1.0, 0.5)), 1e-12);
}

TEST(ExpDecayCov, NoiseOnlyOnSameIndex) {
  const auto p = decay(1.0, 0.5, 0.1);
  EXPECT_DOUBLE_EQ(exp_decay_cov(2, 2, p, true) - exp_decay_cov(2, 2, p, false), 0.1);
}

TEST(ExpDecayCov, RejectsBadInput) {
  EXPECT_THROW(exp_decay_cov(-1, 0, decay(1, 1)), std::invalid_argument);
  EXPECT_THROW(exp_decay_cov(NAN, 0, decay(1, 1)), std::invalid_argument);
  EXPECT_THROW(exp_decay_cov(INFINITY, 0, decay(1, 1)), std::invalid_argument);
  EXPECT_THROW(exp_decay_cov_quadrature(1, 1, decay(1, 1), 8), std::invalid_argument);
}

TEST(ExpDecayCov, QuadratureMatchesClosedFormOnGrid) {
  double worst = 0.0;
  for (double a : {0.5, 1.0, 2.0})
    for (double b : {0.5, 1.0, 2.0})
      for (int t = 0; t <= 10; ++t)
        for (int tp = 0; tp <= 10; ++tp) {
          const auto p = decay(a, b);
          worst = std::max(worst, std::abs(exp_decay_cov(t, tp, p) - exp_decay_cov_quadrature(t, tp, p, 64)));
        }
  EXPECT_LE(worst, 1e-8);
}

TEST(ExpDecayCov, QuadratureNormalizedAndMonotone) {
  for (double a : {0.5, 1.0, 2.0})
    for (double b : {0.5, 1.0, 2.0}) {
      const auto p = decay(a, b);
      EXPECT_NEAR(exp_decay_cov_quadrature(0, 0, p), 1.0, 1e-10);
      double prev = 2.0;
      for (int s = 0; s <= 20; ++s) {
        const double v = exp_decay_cov_quadrature(s / 2.0, s / 2.0, p);
        EXPECT_LE(v, prev);
        prev = v;
      }
    }
}

TEST(ExpDecayCov, SymmetricAndStrictlyDecreasing) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int i = 0; i < 200; ++i) {
    const auto p = decay(0.1 + u(rng) / 4, 0.1 + u(rng) / 4);
    const double t = u(rng), tp = u(rng);
    EXPECT_EQ(exp_decay_cov(t, tp, p), exp_decay_cov(tp, t, p));
    EXPECT_GT(exp_decay_cov(t, tp, p), exp_decay_cov(t + 0.5, tp, p));
  }
}

TEST(CurveGram, SinglePoint) {
  const double times[] = {1.0};
  const auto k = curve_gram(times, decay(1.3, 0.7));
  ASSERT_EQ(k.rows(), 1);
  EXPECT_DOUBLE_EQ(k(0, 0), std::pow(0.7 / 2.7, 1.3));
}

TEST(CurveGram, NoiseRaisesDiagonalOnly) {
  const std::vector<double> times = {1, 2, 5, 9};
  const auto clean = curve_gram(times, decay(1, 0.5, 0.0));
  const auto noisy = curve_gram(times, decay(1, 0.5, 0.1));
  const MatrixXd diff = noisy - clean;
  EXPECT_TRUE(diff.isApprox(0.1 * MatrixXd::Identity(4, 4), 1e-14));
}

TEST(CurveGram, PositiveSemidefiniteOnRandomTimes) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int draw = 0; draw < 20; ++draw) {
    std::vector<double> times;
    double t = 0.0;
    for (int i = 0; i < 15; ++i) times.push_back(t += 0.01 + 3.0 * u(rng));
    const auto p = decay(0.2 + 2 * u(rng), 0.1 + 2 * u(rng));
    const auto k = curve_gram(times, p);
    EXPECT_GE(min_eigenvalue(k), -1e-8);
    EXPECT_NO_THROW(jittered_cholesky(k));
  }
}

TEST(CurveGram, OuTermAdds) {
  const std::vector<double> times = {1, 2};
  const OuParams ou{0.5, 2.0};
  const auto k = curve_gram(times, decay(1, 1), ou);
  EXPECT_NEAR(k(0, 1), std::pow(1.0 / 4.0, 1.0) + 0.5 * std::exp(-0.5), 1e-15);
}

TEST(CurveGram, RejectsUnorderedTimes) {
  const std::vector<double> times = {2, 1};
  EXPECT_THROW(curve_gram(times, decay(1, 1)), std::invalid_argument);
}

TEST(BetaWarp, Examples) {
  for (double x : {0.0, 0.13, 0.5, 0.77, 1.0}) EXPECT_NEAR(beta_warp(x, 1, 1), x, 1e-14);
  for (double c : {0.3, 1.0, 2.0, 7.5}) EXPECT_NEAR(beta_warp(0.5, c, c), 0.5, 1e-14);
  EXPECT_NEAR(beta_warp(0.3, 2, 1), 0.09, 1e-14);
  EXPECT_THROW(beta_warp(1.01, 1, 1), std::invalid_argument);
  EXPECT_THROW(beta_warp(-0.01, 1, 1), std::invalid_argument);
}

TEST(BetaWarp, MonotoneOnDenseGrid) {
  for (double a : {0.5, 1.0, 2.0, 5.0})
    for (double b : {0.5, 1.0, 2.0, 5.0}) {
      double prev = beta_warp(0.0, a, b);
      EXPECT_EQ(prev, 0.0);
      for (int i = 1; i <= 2000; ++i) {
        const double w = beta_warp(i / 2000.0, a, b);
        EXPECT_GE(w, prev);
        prev = w;
      }
      EXPECT_EQ(prev, 1.0);
    }
}

TEST(Matern52, Examples) {
  auto p = WarpedMaternParams::unwarped(1);
  VectorXd x0(1), x1(1);
  x0 << 0.0;
  x1 << 1.0;
  EXPECT_NEAR(matern52_cov(x0, x1, p), 0.523994108831820, 1e-14);
  p.amplitude = 2.5;
  EXPECT_DOUBLE_EQ(matern52_cov(x1, x1, p), 2.5);
  p.length_scales << 1e-4;
  EXPECT_LT(matern52_cov(x0, x1, p), 1e-300);
  VectorXd x2(2);
  EXPECT_THROW(matern52_cov(x0, x2, p), std::invalid_argument);
}

WarpedMaternParams random_space(std::mt19937_64& rng, Eigen::Index dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto p = WarpedMaternParams::unwarped(dim);
  p.amplitude = 0.1 + 3 * u(rng);
  for (Eigen::Index d = 0; d < dim; ++d) {
    p.length_scales(d) = 0.05 + 2 * u(rng);
    p.warp_a(d) = 0.3 + 3 * u(rng);
    p.warp_b(d) = 0.3 + 3 * u(rng);
  }
  return p;
}

TEST(HyperGram, SinglePointIsAmplitude) {
  auto p = WarpedMaternParams::unwarped(3);
  p.amplitude = 1.7;
  const auto k = hyper_gram(Points{VectorXd::Constant(3, 0.4)}, p);
  ASSERT_EQ(k.rows(), 1);
  EXPECT_DOUBLE_EQ(k(0, 0), 1.7);
}

TEST(HyperGram, PermutationEquivariant) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto p = random_space(rng, 3);
  Points xs;
  for (int i = 0; i < 6; ++i) xs.push_back(VectorXd::NullaryExpr(3, [&](Eigen::Index) { return u(rng); }));
  std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  Points ys;
  for (int i : perm) ys.push_back(xs[std::size_t(i)]);
  const auto kx = hyper_gram(xs, p);
  const auto ky = hyper_gram(ys, p);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) EXPECT_EQ(ky(i, j), kx(perm[std::size_t(i)], perm[std::size_t(j)]));
}

TEST(HyperGram, PositiveSemidefiniteOnRandomDraws) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int draw = 0; draw < 20; ++draw) {
    const Eigen::Index dim = 1 + draw % 4;
    const auto p = random_space(rng, dim);
    Points xs;
    for (int i = 0; i < 25; ++i) xs.push_back(VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return u(rng); }));
    const auto k = hyper_gram(xs, p);
    EXPECT_TRUE(k.isApprox(k.transpose(), 0.0));
    EXPECT_GE(min_eigenvalue(k), -1e-8);
    EXPECT_NO_THROW(jittered_cholesky(k));
  }
}

TEST(HyperGram, RejectsOutOfBoundsPoints) {
  const auto p = WarpedMaternParams::unwarped(1);
  EXPECT_THROW(hyper_gram(Points{VectorXd::Constant(1, 1.5)}, p), std::invalid_argument);
}

TEST(JitteredCholesky, RepairsSingularMatrix) {
  MatrixXd k = MatrixXd::Ones(3, 3);
  const auto c = jittered_cholesky(k);
  EXPECT_GT(c.jitter, 0.0);
  EXPECT_LE(c.jitter, 1e-4);
  EXPECT_NO_THROW(jittered_cholesky(MatrixXd::Identity(2, 2)));
  EXPECT_EQ(jittered_cholesky(MatrixXd::Identity(2, 2)).jitter, 0.0);
}

TEST(JitteredCholesky, GivesUpOnIndefiniteMatrix) {
  MatrixXd k(2, 2);
  k << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(jittered_cholesky(k), CholeskyError);
}

}  // namespace
}  // namespace ftbo
