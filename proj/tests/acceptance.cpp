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

// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any criterion fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "gsdsynth/gsdsynth.hpp"

namespace {

using namespace gsdsynth;
using data::Attribute;
using data::Dataset;
using query::Workload;
using Clock = std::chrono::steady_clock;

// Tolerances.
constexpr double kStdRelTol = 0.03;
constexpr double kTvTol = 0.02;
constexpr double kCalibrationSeconds = 30.0;
constexpr double kEpsTol = 1e-3;
constexpr double kOracleGap = 0.02;
constexpr double kOptimizerSeconds = 120.0;
constexpr double kSumTol = 1e-12;
constexpr double kSurrogateTol = 1e-10;
constexpr double kGsdDemoTol = 0.05;
constexpr double kGradTol = 1e-6;
constexpr double kEarlyStopThreshold = 1e-4;

// 0.5 + 2 sqrt(0.5 ln 1e6), evaluated independently.
constexpr double kEpsilonOracle = 5.756521769756932;

struct Verdict {
  bool pass = true;
  std::string detail;
};

double Seconds(Clock::time_point since) { return std::chrono::duration<double>(Clock::now() - since).count(); }

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Tiny {
  data::SchemaPtr schema = data::make_schema(
      {Attribute::categorical("a", 2), Attribute::categorical("b", 2), Attribute::categorical("c", 2)});
  Dataset data = Dataset::from_rows(schema, {{0, 0, 0}, {0, 0, 1}, {1, 1, 0}, {0, 1, 1}});
  std::vector<Workload> workloads = query::gen_categorical_marginal_workloads(*schema, 2);
  std::vector<double> target = query::eval_workloads(workloads, data);
};

gsd::GsdConfig TinyConfig(std::uint64_t seed) {
  gsd::GsdConfig c;
  c.synthetic_rows = 4;
  c.max_generations = 50000;
  c.early_stop_threshold = 0.0;
  c.seed = seed;
  return c;
}

Verdict MechanismCalibration() {
  Verdict v;
  const auto start = Clock::now();
  const std::vector<std::pair<double, double>> pairs{
      {1.0, 1.0}, {std::sqrt(2.0), 0.5}, {std::sqrt(10.0), 0.1}, {0.25, 2.0}, {3.0, 0.02}};
  const std::vector<double> zeros(100000, 0.0);
  double worst_std = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    Rng rng(derive_seed(101, {i}));
    const auto [delta, rho] = pairs[i];
    const auto draw = dp::gaussian_mechanism(zeros, delta, rho, rng);
    double sq = 0.0;
    for (double x : draw.values) sq += x * x;
    const double empirical = std::sqrt(sq / static_cast<double>(zeros.size()));
    const double expected = delta * std::sqrt(1.0 / (2.0 * rho));
    worst_std = std::max(worst_std, std::abs(empirical - expected) / expected);
  }
  v.pass = worst_std <= kStdRelTol;

  struct Case {
    std::vector<double> scores;
    double rho;
    std::size_t n;
  };
  const std::vector<Case> cases{{{0.0, 1.0}, 0.5, 1},
                                {{0.0, 0.5, 1.0, 1.5}, 0.5, 1},
                                {{0.02, 0.02, 0.05}, 2.0, 20}};
  double worst_tv = 0.0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto& cs = cases[c];
    const double scale = std::sqrt(2.0 * cs.rho) * static_cast<double>(cs.n);
    std::vector<double> softmax;
    for (double s : cs.scores) softmax.push_back(std::exp(s * scale));
    const double z = std::accumulate(softmax.begin(), softmax.end(), 0.0);
    std::vector<double> freq(cs.scores.size(), 0.0);
    Rng rng(derive_seed(202, {c}));
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) freq[dp::report_noisy_max(cs.scores, cs.rho, cs.n, rng)] += 1.0;
    double tv = 0.0;
    for (std::size_t i = 0; i < freq.size(); ++i) tv += std::abs(freq[i] / trials - softmax[i] / z);
    worst_tv = std::max(worst_tv, 0.5 * tv);
  }
  const double secs = Seconds(start);
  v.pass = v.pass && worst_tv <= kTvTol && secs < kCalibrationSeconds;
  v.detail = "worst std rel err " + Fmt("%.4f", worst_std) + ", worst TV " + Fmt("%.4f", worst_tv) + ", " +
             Fmt("%.1f", secs) + " s";
  return v;
}

Verdict PrivacyAccounting() {
  Tiny t;
  mech::AdaptiveOptions opts;
  opts.epochs = 25;
  opts.samples = 1;
  auto config = TinyConfig(1);
  config.max_generations = 20;
  const auto r = mech::adaptive(mech::DatasetSource(t.data), t.workloads, 1.0, opts, config);
  const auto& entries = r.ledger.entries();
  bool ok = entries.size() == 50;
  for (const auto& e : entries) ok = ok && e.rho == 0.02;
  ok = ok && r.ledger.spent_rho() == 1.0;
  const double eps = dp::zcdp_to_dp(0.5, 1e-6);
  ok = ok && std::abs(eps - 5.756) <= kEpsTol && std::abs(eps - kEpsilonOracle) <= kEpsTol;
  return {ok, std::to_string(entries.size()) + " entries, spent " + Fmt("%.17g", r.ledger.spent_rho()) +
                  ", eps(0.5, 1e-6) = " + Fmt("%.6f", eps)};
}

Verdict OracleEquivalence() {
  Tiny t;
  const auto start = Clock::now();
  const auto best = eval::brute_force_projection(t.schema, 4, t.workloads, t.target);
  const double floor = eval::max_error(t.workloads, t.data, best.data);
  int good = 0;
  std::string errs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = gsd::run(TinyConfig(seed), t.schema, t.workloads, t.target);
    const double err = eval::max_error(t.workloads, t.data, r.best);
    if (err <= floor + kOracleGap) ++good;
    errs += (errs.empty() ? "" : " ") + Fmt("%.4f", err);
  }
  const double secs = Seconds(start);
  return {good >= 4 && secs < kOptimizerSeconds,
          std::to_string(good) + "/5 seeds within " + Fmt("%.2f", kOracleGap) + " of optimum " + Fmt("%.4f", floor) +
              " (errors " + errs + "), " + Fmt("%.1f", secs) + " s"};
}

// First generation whose incumbent loss is at most 10% of the initial loss.
std::size_t GenerationsToTenth(const gsd::GsdConfig& config, const Tiny& t) {
  const auto r = gsd::run(config, t.schema, t.workloads, t.target);
  const auto& h = r.loss_history;
  for (std::size_t g = 0; g < h.size(); ++g) {
    if (h[g] <= 0.1 * h[0]) return g;
  }
  return config.max_generations + 1;
}

Verdict CrossoverAblation() {
  Tiny t;
  std::vector<std::size_t> with_cross, mut_only;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = TinyConfig(seed);
    c.p_mut = 100;
    c.p_cross = 100;
    with_cross.push_back(GenerationsToTenth(c, t));
    c.p_cross = 0;
    mut_only.push_back(GenerationsToTenth(c, t));
  }
  auto median = [](std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  auto list = [](const std::vector<std::size_t>& v) {
    std::string s;
    for (auto x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
    return s;
  };
  const auto mc = median(with_cross);
  const auto mm = median(mut_only);
  return {mc < mm, "median generations to 10% loss: crossover " + std::to_string(mc) + " [" + list(with_cross) +
                       "], mutation-only " + std::to_string(mm) + " [" + list(mut_only) + "]"};
}

Verdict WorkloadsAndSensitivity() {
  std::vector<Attribute> attrs;
  for (int i = 0; i < 17; ++i) attrs.push_back(Attribute::categorical("c" + std::to_string(i), 2));
  const auto s17 = data::make_schema(std::move(attrs));
  const auto two = query::gen_categorical_marginal_workloads(*s17, 2);
  const auto three = query::gen_categorical_marginal_workloads(*s17, 3);
  bool ok = two.size() == 136 && three.size() == 680;
  ok = ok && two[0].l2_sensitivity == std::sqrt(2.0);

  const auto s = data::make_schema({Attribute::categorical("a", 3), Attribute::categorical("b", 2),
                                    Attribute::numeric("x"), Attribute::numeric("y")});
  auto workloads = query::gen_categorical_marginal_workloads(*s, 2);
  const auto bt = query::gen_binary_tree_workloads(*s, 2, 5);
  ok = ok && !bt.empty() && bt[0].l2_sensitivity == std::sqrt(10.0);
  workloads.insert(workloads.end(), bt.begin(), bt.end());
  const std::size_t n = 50;
  double worst_ratio = 0.0;
  Rng rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = Dataset::random(s, n, rng);
    auto d2 = d;
    const std::size_t r = rng.below(n);
    for (std::size_t c = 0; c < s->size(); ++c) d2.set(r, c, s->sample_value(c, rng));
    for (const auto& w : workloads) {
      const auto a = query::eval_workloads(std::span(&w, 1), d);
      const auto b = query::eval_workloads(std::span(&w, 1), d2);
      double sq = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
      worst_ratio = std::max(worst_ratio, std::sqrt(sq) / (w.l2_sensitivity / static_cast<double>(n)));
    }
  }
  ok = ok && worst_ratio <= 1.0 + 1e-12;
  return {ok, std::to_string(two.size()) + " two-way, " + std::to_string(three.size()) +
                  " three-way, worst observed change / bound " + Fmt("%.4f", worst_ratio)};
}

Verdict QueryEngine() {
  const auto s = data::make_schema({Attribute::categorical("a", 3), Attribute::categorical("b", 4),
                                    Attribute::numeric("x"), Attribute::numeric("y"), Attribute::categorical("c", 2)});
  Rng rng(66);
  const auto d = Dataset::random(s, 1001, rng);
  double worst_sum = 0.0;
  const auto cat = query::gen_categorical_marginal_workloads(*s, 2);
  for (const auto& w : cat) {
    const auto a = query::eval_workloads(std::span(&w, 1), d);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(a.begin(), a.end(), 0.0) - 1.0));
  }

  std::vector<double> points{0.0, 0.5, 1.0, 0.25, 0.75};
  for (int i = 0; i < 5000; ++i) points.push_back(rng.uniform());
  bool partition = true;
  for (std::size_t level = 1; level <= 5; ++level) {
    const auto ivs = query::dyadic_intervals(level);
    for (double x : points) {
      int hits = 0;
      for (const auto& iv : ivs) hits += iv.contains(x) ? 1 : 0;
      partition = partition && hits == 1;
    }
  }

  auto all = cat;
  const auto bt = query::gen_binary_tree_workloads(*s, 2, 5);
  all.insert(all.end(), bt.begin(), bt.end());
  all.push_back(query::gen_random_prefixes(*s, 200, rng));
  all.push_back(query::gen_random_halfspaces(*s, 200, rng));
  const query::WorkloadEvaluator eval(*s, all);
  const auto sequential = eval.answers(d);
  bool identical = true;
  for (std::size_t threads : {2, 4, 8}) {
    WorkerPool pool(threads);
    identical = identical && eval.answers(d, &pool) == sequential;
  }
  return {worst_sum <= kSumTol && partition && identical,
          "worst |sum - 1| " + Fmt("%.3g", worst_sum) + ", partition " + (partition ? "ok" : "broken") +
              ", parallel " + (identical ? "bit-identical" : "differs")};
}

Verdict SigmoidDemo() {
  const auto r = sigmoid::run_demo(sigmoid::DemoOptions{});
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> rows(1 + rng.below(8));
    for (auto& row : rows) row = {rng.uniform()};
    const auto d = Dataset::from_rows(sigmoid::demo_schema(), rows);
    const sigmoid::SigmoidPrefix sp{rng.uniform(), 0.5 + 20.0 * rng.uniform()};
    const double target = rng.uniform();
    const auto grad = sigmoid::surrogate_gradient(d, sp, target);
    double scale = 1e-12;
    double diff = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double h = 1e-5;
      auto plus = d;
      auto minus = d;
      plus.set(i, 0, rows[i][0] + h);
      minus.set(i, 0, rows[i][0] - h);
      const double fd =
          (sigmoid::surrogate_loss(plus, sp, target) - sigmoid::surrogate_loss(minus, sp, target)) / (2.0 * h);
      scale = std::max(scale, std::abs(grad[i]));
      diff = std::max(diff, std::abs(fd - grad[i]));
    }
    worst = std::max(worst, diff / scale);
  }
  const bool ok = r.annealed.surrogate_loss < kSurrogateTol && r.annealed_true_error == 0.5 &&
                  r.gsd_true_error <= kGsdDemoTol && worst <= kGradTol;
  return {ok, "annealed surrogate " + Fmt("%.3g", r.annealed.surrogate_loss) + " true error " +
                  Fmt("%.17g", r.annealed_true_error) + ", gsd true error " + Fmt("%.4f", r.gsd_true_error) +
                  ", worst gradient rel err " + Fmt("%.2e", worst)};
}

Verdict EarlyStop() {
  bool flat_fires = true;
  bool decay_silent = true;
  for (std::size_t window : {1, 10, 100, 1000}) {
    const std::vector<double> flat(window + 1, 0.37);
    flat_fires = flat_fires && gsd::early_stop_check(flat, window, kEarlyStopThreshold);
    const std::vector<double> too_short(window, 0.37);
    flat_fires = flat_fires && !gsd::early_stop_check(too_short, window, kEarlyStopThreshold);
    for (double ratio : {0.5, 0.9, 0.999}) {
      std::vector<double> h{1.0};
      for (int g = 0; g < 3000; ++g) {
        h.push_back(h.back() * ratio);
        if (h.back() == 0.0) break;
        decay_silent = decay_silent && !gsd::early_stop_check(h, window, kEarlyStopThreshold);
      }
    }
  }
  return {flat_fires && decay_silent, std::string("flat history ") + (flat_fires ? "stops" : "does not stop") +
                                          ", geometric decay " + (decay_silent ? "never stops" : "stops")};
}

std::string Slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Verdict Determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("gsdsynth_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string samples = GSDSYNTH_SAMPLES_DIR;
  const std::string out = (dir / "synth.csv").string();
  std::string reference;
  bool ok = true;
  int runs = 0;
  for (const char* threads : {"1", "4", "8"}) {
    for (int rep = 0; rep < 2; ++rep) {
      std::ostringstream sink;
      const int code = cli::run({"generate", "--data", samples + "/adult_small.csv", "--schema",
                                 samples + "/adult_small.schema.json", "--queries", "binary-tree:k=2", "--mode",
                                 "adaptive", "--rho", "1", "--T", "3", "--rows", "200", "--generations", "400",
                                 "--seed", "2026", "--threads", threads, "--out", out},
                                sink, sink);
      const std::string bytes =
          Slurp(out) + '\0' + Slurp(out + ".manifest.json") + '\0' + Slurp(out + ".workloads.json");
      ok = ok && code == 0;
      if (reference.empty()) {
        reference = bytes;
      } else {
        ok = ok && bytes == reference;
      }
      ++runs;
    }
  }
  fs::remove_all(dir);
  return {ok, std::to_string(runs) + " runs at 1/4/8 threads " + (ok ? "byte-identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"mechanism calibration", MechanismCalibration},
      {"privacy accounting", PrivacyAccounting},
      {"optimizer oracle equivalence", OracleEquivalence},
      {"crossover ablation", CrossoverAblation},
      {"workload counts and sensitivities", WorkloadsAndSensitivity},
      {"query engine invariants", QueryEngine},
      {"sigmoid demo", SigmoidDemo},
      {"early stop", EarlyStop},
      {"end-to-end determinism", Determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("[%s] %zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
