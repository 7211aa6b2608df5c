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

#include "gsdsynth/dp_core.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

namespace gsdsynth::dp {
namespace {

TEST(PrivacyLedgerTest, SplitBudgetSumsBackExactly) {
  PrivacyLedger ledger(1.0);
  const double part = split_budget(1.0, 25, 1);
  EXPECT_EQ(part, 0.02);
  for (int i = 0; i < 50; ++i) ledger.spend("step", part);
  EXPECT_EQ(ledger.entries().size(), 50u);
  EXPECT_EQ(ledger.spent_rho(), 1.0);
  EXPECT_EQ(ledger.remaining_rho(), 0.0);
}

TEST(PrivacyLedgerTest, OverspendThrows) {
  PrivacyLedger ledger(0.5);
  ledger.spend("a", 0.3);
  EXPECT_THROW(ledger.spend("b", 0.3), BudgetError);
  EXPECT_EQ(ledger.entries().size(), 1u);
  EXPECT_DOUBLE_EQ(ledger.spent_rho(), 0.3);
}

TEST(PrivacyLedgerTest, RejectsBadParameters) {
  EXPECT_THROW(PrivacyLedger(-1.0), ParameterError);
  EXPECT_THROW(PrivacyLedger(1.0, 0.0), ParameterError);
  PrivacyLedger ledger(1.0);
  EXPECT_THROW(ledger.spend("zero", 0.0), ParameterError);
}

TEST(GaussianTest, SigmaFormula) {
  EXPECT_NEAR(gaussian_sigma(std::sqrt(2.0), 0.25), 2.0, 1e-12);
  EXPECT_NEAR(gaussian_sigma(1.0, 0.5), 1.0, 1e-15);
  EXPECT_THROW(gaussian_sigma(1.0, 0.0), ParameterError);
  EXPECT_THROW(gaussian_sigma(0.0, 1.0), ParameterError);
}

TEST(GaussianTest, HugeRhoIsNearlyExact) {
  Rng rng(3);
  const std::vector<double> answers{0.1, 0.5, 0.9};
  const auto draw = gaussian_mechanism(answers, 1.0, 1e12, rng);
  ASSERT_EQ(draw.values.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(draw.values[i], answers[i], 1e-4);
  EXPECT_EQ(draw.rho_spent, 1e12);
}

TEST(GaussianTest, SameSeedSameNoise) {
  const std::vector<double> answers(10, 0.5);
  Rng a(11);
  Rng b(11);
  EXPECT_EQ(gaussian_mechanism(answers, 1.0, 0.1, a).values, gaussian_mechanism(answers, 1.0, 0.1, b).values);
}

TEST(ReportNoisyMaxTest, HugeRhoPicksArgmax) {
  Rng rng(5);
  const std::vector<double> scores{0.1, 0.7, 0.3};
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(report_noisy_max(scores, 1e12, 100, rng), 1u);
}

TEST(ReportNoisyMaxTest, MatchesSoftmaxOnTwoScores) {
  // Softmax with inverse temperature sqrt(2 rho) n = 5 over [0.2, 0.1].
  Rng rng(17);
  const std::vector<double> scores{0.2, 0.1};
  const int trials = 200000;
  int first = 0;
  for (int i = 0; i < trials; ++i) first += report_noisy_max(scores, 0.125, 10, rng) == 0 ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(first) / trials, 0.6224593312018545, 0.005);
}

TEST(ReportNoisyMaxTest, EmptyScoresThrow) {
  Rng rng(1);
  EXPECT_THROW(report_noisy_max(std::vector<double>{}, 1.0, 10, rng), ParameterError);
}

TEST(ConversionTest, ZcdpToDpClosedForm) {
  EXPECT_NEAR(zcdp_to_dp(0.5, 1e-6), 5.756521769756932, 1e-12);
  EXPECT_NEAR(zcdp_to_dp(1e-9, 0.5), 1e-9 + 2.0 * std::sqrt(1e-9 * std::log(2.0)), 1e-15);
}

TEST(ConversionTest, DpToZcdpInvertsConversion) {
  for (double rho : {1e-4, 0.01, 0.5, 3.0}) {
    const double eps = zcdp_to_dp(rho, 1e-6);
    EXPECT_NEAR(dp_to_zcdp(eps, 1e-6), rho, 1e-10) << rho;
  }
}

TEST(ConversionTest, ZcdpToDpIsMonotone) {
  double prev = 0.0;
  for (double rho = 0.01; rho < 5.0; rho += 0.01) {
    const double eps = zcdp_to_dp(rho, 1e-6);
    EXPECT_GT(eps, prev);
    prev = eps;
  }
}

TEST(SplitBudgetTest, Formula) {
  EXPECT_NEAR(split_budget(0.74, 50, 2), 0.0037, 1e-15);
  EXPECT_THROW(split_budget(1.0, 0, 1), ParameterError);
  EXPECT_THROW(split_budget(1.0, 1, 0), ParameterError);
}

}  // namespace
}  // namespace gsdsynth::dp
