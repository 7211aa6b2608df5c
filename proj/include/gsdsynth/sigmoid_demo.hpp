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

// Sigmoid relaxation of a one-dimensional prefix query, annealed gradient
// descent on it, and a side-by-side run of the genetic optimizer on the
// same instance. From the all-0.5 start every sigmoid stage has zero
// surrogate loss and zero gradient, yet the true prefix answer is off by 0.5.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gsdsynth/dataset.hpp"
#include "gsdsynth/errors.hpp"
#include "gsdsynth/gsd.hpp"
#include "gsdsynth/queries.hpp"

namespace gsdsynth::sigmoid {

using data::Dataset;

struct SigmoidPrefix {
  double threshold = 0.5;
  double inverse_temperature = 1.0;

  double operator()(double x) const { return 1.0 / (1.0 + std::exp(-inverse_temperature * (x - threshold))); }
};

// (1/N) sum_r f(x_r) over column 0.
inline double sigmoid_query(const Dataset& d, const SigmoidPrefix& sp) {
  if (d.rows() == 0) throw ParameterError("sigmoid_query: dataset has no rows");
  double sum = 0.0;
  for (double x : d.column(0)) sum += sp(x);
  return sum / static_cast<double>(d.rows());
}

inline double surrogate_loss(const Dataset& d, const SigmoidPrefix& sp, double target) {
  const double gap = sigmoid_query(d, sp) - target;
  return gap * gap;
}

// dL/dx_r = 2 (f_bar - target) * sigma * s_r (1 - s_r) / N.
inline std::vector<double> surrogate_gradient(const Dataset& d, const SigmoidPrefix& sp, double target) {
  const double gap = sigmoid_query(d, sp) - target;
  const double scale = 2.0 * gap * sp.inverse_temperature / static_cast<double>(d.rows());
  std::vector<double> grad(d.rows());
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const double s = sp(d.at(r, 0));
    grad[r] = scale * s * (1.0 - s);
  }
  return grad;
}

// σ_j = first · 2^(j-1), j = 1..count.
inline std::vector<double> doubling_temperatures(double first, std::size_t count) {
  std::vector<double> temps(count);
  for (std::size_t j = 0; j < count; ++j) temps[j] = std::ldexp(first, static_cast<int>(j));
  return temps;
}

struct AnnealOptions {
  double threshold = 0.5;
  std::vector<double> temperatures = doubling_temperatures(2.0, 11);  // 2 .. 2048
  double learning_rate = 1.0;
  std::size_t max_steps = 1000;  // per temperature
  double gradient_tolerance = 1e-6;
};

struct TracePoint {
  std::size_t step = 0;
  double temperature = 0.0;
  double surrogate_loss = 0.0;
};

struct AnnealResult {
  Dataset data;
  std::vector<TracePoint> trace;
  double surrogate_loss = 0.0;  // at the last temperature
};

// Projected gradient descent: after each step values are clipped to [0, 1].
inline AnnealResult anneal_descent(double target, const Dataset& init, const AnnealOptions& options) {
  if (options.temperatures.empty()) throw ParameterError("anneal_descent: no temperatures");
  if (init.cols() != 1) throw ParameterError("anneal_descent: expected a single column");
  init.validate();
  AnnealResult result{init, {}, 0.0};
  std::size_t step = 0;
  for (double temp : options.temperatures) {
    if (!(temp > 0.0)) throw ParameterError("anneal_descent: temperatures must be positive");
    const SigmoidPrefix sp{options.threshold, temp};
    for (std::size_t k = 0;; ++k) {
      const double loss = surrogate_loss(result.data, sp, target);
      result.trace.push_back({step, temp, loss});
      result.surrogate_loss = loss;
      const auto grad = surrogate_gradient(result.data, sp, target);
      double norm = 0.0;
      for (double g : grad) norm += g * g;
      if (std::sqrt(norm) <= options.gradient_tolerance || k == options.max_steps) break;
      for (std::size_t r = 0; r < grad.size(); ++r) {
        const double x = result.data.at(r, 0) - options.learning_rate * grad[r];
        result.data.set(r, 0, std::clamp(x, 0.0, 1.0));
      }
      ++step;
    }
  }
  return result;
}

struct DemoOptions {
  std::size_t rows = 100;
  AnnealOptions anneal;
  // synthetic_rows is overridden with `rows`. A single elite keeps the
  // genetic run on the same all-0.5 start as the annealer.
  gsd::GsdConfig gsd = [] {
    gsd::GsdConfig c;
    c.elite_size = 1;
    return c;
  }();
};

struct DemoResult {
  AnnealResult annealed;
  double annealed_true_error = 0.0;
  Dataset gsd_data;
  double gsd_true_error = 0.0;
  std::size_t gsd_generations = 0;
};

inline data::SchemaPtr demo_schema() {
  return data::make_schema({data::Attribute::numeric("x", data::NumericRange{0.0, 1.0})});
}

// The instance: half the rows at 0 and half at 1, and the non-strict prefix
// query x <= 0.5, whose true answer is 0.5. Both optimizers start from all
// rows at 0.5.
inline DemoResult run_demo(const DemoOptions& options) {
  if (options.rows < 2) throw ParameterError("sigmoid demo: need at least two rows");
  const auto schema = demo_schema();
  Dataset original(schema, options.rows);
  for (std::size_t r = options.rows / 2; r < options.rows; ++r) original.set(r, 0, 1.0);
  Dataset init(schema, options.rows);
  for (std::size_t r = 0; r < options.rows; ++r) init.set(r, 0, 0.5);

  const double threshold = options.anneal.threshold;
  query::Workload w{"prefix", query::WorkloadClass::kPrefix, {query::Prefix{{}, {}, {0}, {threshold}, false}}, 1.0};
  const std::vector<query::Workload> workloads{w};
  const double truth = query::eval_query(w.queries[0], original);

  DemoResult out;
  out.annealed = anneal_descent(truth, init, options.anneal);
  out.annealed_true_error = std::abs(query::eval_query(w.queries[0], out.annealed.data) - truth);

  gsd::GsdConfig config = options.gsd;
  config.synthetic_rows = options.rows;
  const std::vector<double> target{truth};
  auto run = gsd::run(config, schema, workloads, target, {}, &init);
  out.gsd_true_error = std::abs(query::eval_query(w.queries[0], run.best) - truth);
  out.gsd_data = std::move(run.best);
  out.gsd_generations = run.generations;
  return out;
}

}  // namespace gsdsynth::sigmoid
