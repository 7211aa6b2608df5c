//
// Copyright 2026 The gsdsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "gsdsynth/sigmoid_demo.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

namespace gsdsynth::sigmoid {
namespace {

Dataset Column(const std::vector<double>& values) {
  std::vector<std::vector<double>> rows;
  for (double v : values) rows.push_back({v});
  return Dataset::from_rows(demo_schema(), rows);
}

TEST(SigmoidQueryTest, HalfAtThreshold) {
  const auto d = Column(std::vector<double>(7, 0.5));
  for (double sigma : {0.1, 1.0, 64.0, 1e6}) EXPECT_EQ(sigmoid_query(d, {0.5, sigma}), 0.5);
}

TEST(SigmoidQueryTest, ZeroTemperatureIsHalfEverywhere) {
  const auto d = Column({0.0, 0.1, 0.9, 1.0});
  EXPECT_EQ(sigmoid_query(d, {0.5, 0.0}), 0.5);
}

TEST(SigmoidQueryTest, SharpLimitOnZeroOne) {
  const auto d = Column({0.0, 1.0});
  EXPECT_NEAR(sigmoid_query(d, {0.5, 1e4}), 0.5, 1e-6);
}

TEST(SigmoidQueryTest, KnownValueAtZero) {
  const auto d = Column({0.0});
  // 1 / (1 + e) at sigma = 2, tau = 0.5.
  EXPECT_NEAR(sigmoid_query(d, {0.5, 2.0}), 0.2689414213699951, 1e-15);
}

TEST(GradientTest, MatchesCentralDifferences) {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(1 + rng.below(8));
    for (double& x : xs) x = rng.uniform();
    const auto d = Column(xs);
    const SigmoidPrefix sp{rng.uniform(), 0.5 + 20.0 * rng.uniform()};
    const double target = rng.uniform();
    const auto grad = surrogate_gradient(d, sp, target);
    // Relative to the largest gradient entry, so rows deep in a sigmoid tail
    // do not compare rounding noise against a near-zero value.
    double scale = 1e-12;
    double worst = 0.0;
    for (std::size_t r = 0; r < xs.size(); ++r) {
      const double h = 1e-5;
      auto plus = d;
      auto minus = d;
      plus.set(r, 0, xs[r] + h);
      minus.set(r, 0, xs[r] - h);
      const double fd = (surrogate_loss(plus, sp, target) - surrogate_loss(minus, sp, target)) / (2.0 * h);
      scale = std::max(scale, std::abs(grad[r]));
      worst = std::max(worst, std::abs(fd - grad[r]));
    }
    EXPECT_LE(worst / scale, 1e-6) << "trial " << trial;
  }
}

TEST(AnnealTest, DoublingSchedule) {
  EXPECT_EQ(doubling_temperatures(2.0, 4), (std::vector<double>{2, 4, 8, 16}));
  EXPECT_EQ(AnnealOptions{}.temperatures.back(), 2048.0);
}

TEST(AnnealTest, StuckAtHalfFromHalfInit) {
  const auto init = Column(std::vector<double>(10, 0.5));
  const auto r = anneal_descent(0.5, init, AnnealOptions{});
  EXPECT_EQ(r.data, init);
  EXPECT_LT(r.surrogate_loss, 1e-10);
  // One evaluation per temperature, each already stationary.
  EXPECT_EQ(r.trace.size(), AnnealOptions{}.temperatures.size());
}

TEST(AnnealTest, PositiveLossFromZeroInit) {
  const auto init = Column(std::vector<double>(10, 0.0));
  AnnealOptions opts;
  opts.temperatures = {2.0};
  opts.max_steps = 0;
  const auto r = anneal_descent(0.5, init, opts);
  EXPECT_GT(r.trace.front().surrogate_loss, 0.0);
}

TEST(AnnealTest, DescendsFromZeroInit) {
  const auto init = Column(std::vector<double>(10, 0.0));
  AnnealOptions opts;
  opts.temperatures = {2.0, 4.0};
  const auto r = anneal_descent(0.5, init, opts);
  EXPECT_LT(r.surrogate_loss, r.trace.front().surrogate_loss);
}

TEST(AnnealTest, ZeroLearningRateKeepsInit) {
  Rng rng(3);
  const auto init = Dataset::random(demo_schema(), 12, rng);
  AnnealOptions opts;
  opts.learning_rate = 0.0;
  opts.max_steps = 5;
  EXPECT_EQ(anneal_descent(0.3, init, opts).data, init);
}

TEST(AnnealTest, RejectsBadInput) {
  const auto init = Column({0.5});
  AnnealOptions opts;
  opts.temperatures = {};
  EXPECT_THROW(anneal_descent(0.5, init, opts), ParameterError);
  opts.temperatures = {-1.0};
  EXPECT_THROW(anneal_descent(0.5, init, opts), ParameterError);
}

TEST(DemoTest, AnnealStuckGsdSolves) {
  const auto r = run_demo(DemoOptions{});
  EXPECT_LT(r.annealed.surrogate_loss, 1e-10);
  EXPECT_EQ(r.annealed_true_error, 0.5);
  EXPECT_LE(r.gsd_true_error, 0.05);
}

}  // namespace
}  // namespace gsdsynth::sigmoid
