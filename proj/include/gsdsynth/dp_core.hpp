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

#pragma once

// zCDP accounting and the randomized primitives used by the mechanisms:
// the Gaussian mechanism, report-noisy-max with Gumbel noise, and the
// zCDP -> (epsilon, delta) conversion.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gsdsynth/errors.hpp"
#include "gsdsynth/rng.hpp"

namespace gsdsynth::dp {

// Running zCDP budget. Spends are summed with Neumaier compensation so that a
// budget split into k equal parts sums back to the total.
class PrivacyLedger {
 public:
  struct Entry {
    std::string label;
    double rho;
  };

  explicit PrivacyLedger(double total_rho, double delta = 1e-6)
      : total_rho_(total_rho), delta_(delta) {
    if (!(total_rho >= 0.0) || !std::isfinite(total_rho)) {
      throw ParameterError("PrivacyLedger: total_rho must be a finite nonnegative real");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
      throw ParameterError("PrivacyLedger: delta must lie in (0, 1)");
    }
  }

  // Relative slack allowed when a spend lands on the budget boundary.
  static constexpr double kRelativeSlack = 1e-12;

  void spend(std::string label, double rho) {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
      throw ParameterError("PrivacyLedger: spend '" + label + "' must be positive");
    }
    auto [sum, comp] = add(sum_, comp_, rho);
    if (sum + comp > total_rho_ * (1.0 + kRelativeSlack)) {
      throw BudgetError("PrivacyLedger: spend '" + label + "' of rho=" + std::to_string(rho) +
                        " exceeds remaining budget " + std::to_string(remaining_rho()));
    }
    sum_ = sum;
    comp_ = comp;
    entries_.push_back({std::move(label), rho});
  }

  double total_rho() const { return total_rho_; }
  double spent_rho() const { return sum_ + comp_; }
  double remaining_rho() const { return std::max(0.0, total_rho_ - spent_rho()); }
  double delta() const { return delta_; }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  static std::pair<double, double> add(double sum, double comp, double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    return {t, comp};
  }

  double total_rho_;
  double delta_;
  double sum_ = 0.0;
  double comp_ = 0.0;
  std::vector<Entry> entries_;
};

struct NoiseDraw {
  std::vector<double> values;
  double sigma = 0.0;
  double rho_spent = 0.0;
};

// Noise standard deviation giving rho-zCDP for the given L2 sensitivity.
inline double gaussian_sigma(double l2_sensitivity, double rho) {
  if (!(rho > 0.0)) throw ParameterError("gaussian_mechanism: rho must be positive");
  if (!(l2_sensitivity > 0.0)) {
    throw ParameterError("gaussian_mechanism: l2_sensitivity must be positive");
  }
  return l2_sensitivity * std::sqrt(1.0 / (2.0 * rho));
}

// answers + N(0, sigma^2 I). Recording the spend is the caller's job.
inline NoiseDraw gaussian_mechanism(std::span<const double> answers, double l2_sensitivity,
                                    double rho, Rng& rng) {
  NoiseDraw draw;
  draw.sigma = gaussian_sigma(l2_sensitivity, rho);
  draw.rho_spent = rho;
  draw.values.reserve(answers.size());
  for (double a : answers) {
    if (!std::isfinite(a)) throw ParameterError("gaussian_mechanism: answers must be finite");
    draw.values.push_back(a + draw.sigma * rng.normal());
  }
  return draw;
}

// Scale of the Gumbel noise used by report_noisy_max: 1 / (sqrt(2 rho) n).
inline double gumbel_scale(double rho, std::size_t n_rows) {
  if (!(rho > 0.0)) throw ParameterError("report_noisy_max: rho must be positive");
  if (n_rows == 0) throw ParameterError("report_noisy_max: n_rows must be positive");
  return 1.0 / (std::sqrt(2.0 * rho) * static_cast<double>(n_rows));
}

// argmax_i (scores[i] + Z_i), Z_i ~ Gumbel(1/(sqrt(2 rho) n)). Equivalent in
// distribution to the exponential mechanism with weights
// exp(scores[i] * sqrt(2 rho) * n). Ties go to the lowest index.
inline std::size_t report_noisy_max(std::span<const double> scores, double rho,
                                    std::size_t n_rows, Rng& rng) {
  if (scores.empty()) throw ParameterError("report_noisy_max: empty score vector");
  const double scale = gumbel_scale(rho, n_rows);
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double v = scores[i] + rng.gumbel(scale);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

// rho-zCDP implies (rho + 2 sqrt(rho ln(1/delta)), delta)-DP.
inline double zcdp_to_dp(double rho, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("zcdp_to_dp: delta must lie in (0, 1)");
  if (!(rho >= 0.0)) throw ParameterError("zcdp_to_dp: rho must be nonnegative");
  return rho + 2.0 * std::sqrt(rho * std::log(1.0 / delta));
}

// Inverse of zcdp_to_dp in rho, by bisection to an absolute width of 1e-12.
inline double dp_to_zcdp(double epsilon, double delta) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ParameterError("dp_to_zcdp: epsilon must be a finite positive real");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("dp_to_zcdp: delta must lie in (0, 1)");
  // zcdp_to_dp(epsilon) >= epsilon, so the root lies in [0, epsilon].
  double lo = 0.0;
  double hi = epsilon;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (zcdp_to_dp(mid, delta) < epsilon) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

// Per-call budget for T epochs of S select+measure pairs.
inline double split_budget(double rho, std::size_t epochs, std::size_t samples) {
  if (!(rho > 0.0)) throw ParameterError("split_budget: rho must be positive");
  if (epochs == 0 || samples == 0) throw ParameterError("split_budget: T and S must be positive");
  return rho / (2.0 * static_cast<double>(epochs) * static_cast<double>(samples));
}

}  // namespace gsdsynth::dp
