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

// Error metrics and an exhaustive projection oracle for tiny categorical
// domains.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gsdsynth/dataset.hpp"
#include "gsdsynth/errors.hpp"
#include "gsdsynth/evaluator.hpp"
#include "gsdsynth/queries.hpp"

namespace gsdsynth::eval {

using data::Dataset;
using query::Workload;

namespace detail {

inline std::vector<double> answer_gaps(std::span<const Workload> workloads, const Dataset& d,
                                       const Dataset& d_hat) {
  if (!(d.schema() == d_hat.schema())) throw ParameterError("error metrics: datasets have different schemas");
  const auto a = query::eval_workloads(workloads, d);
  const auto b = query::eval_workloads(workloads, d_hat);
  std::vector<double> gaps(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) gaps[i] = std::abs(a[i] - b[i]);
  return gaps;
}

}  // namespace detail

// max_i |q_i(D) - q_i(D_hat)|; 0 for an empty workload list.
inline double max_error(std::span<const Workload> workloads, const Dataset& d, const Dataset& d_hat) {
  const auto gaps = detail::answer_gaps(workloads, d, d_hat);
  return gaps.empty() ? 0.0 : *std::max_element(gaps.begin(), gaps.end());
}

// sqrt((1/m) sum_i (q_i(D) - q_i(D_hat))^2).
inline double avg_error(std::span<const Workload> workloads, const Dataset& d, const Dataset& d_hat) {
  const auto gaps = detail::answer_gaps(workloads, d, d_hat);
  if (gaps.empty()) return 0.0;
  double sum = 0.0;
  for (double g : gaps) sum += g * g;
  return std::sqrt(sum / static_cast<double>(gaps.size()));
}

struct WorkloadErrors {
  std::string name;
  double max_error = 0.0;
  double avg_error = 0.0;
};

inline std::vector<WorkloadErrors> per_workload_errors(std::span<const Workload> workloads, const Dataset& d,
                                                       const Dataset& d_hat) {
  std::vector<WorkloadErrors> out;
  for (std::size_t w = 0; w < workloads.size(); ++w) {
    const auto one = workloads.subspan(w, 1);
    out.push_back({workloads[w].name, max_error(one, d, d_hat), avg_error(one, d, d_hat)});
  }
  return out;
}

struct Projection {
  Dataset data;
  double loss = 0.0;
};

// Upper bound on |domain|^N' accepted by brute_force_projection.
inline constexpr double kBruteForceLimit = 1e6;

// Exact argmin over all N'-row multisets of the (all-categorical) domain of
// sum_i (target_i - q_i(D))^2. Rows of the returned dataset are sorted by
// domain index; ties go to the lexicographically smallest multiset.
inline Projection brute_force_projection(const data::SchemaPtr& schema, std::size_t rows,
                                         std::span<const Workload> workloads, std::span<const double> target) {
  if (rows == 0) throw ParameterError("brute force: need at least one row");
  if (!schema->numeric_indices().empty()) {
    throw UnsupportedError("brute force: numeric attributes are not enumerable");
  }
  double domain = 1.0;
  for (const auto& a : schema->attributes()) domain *= static_cast<double>(a.cardinality());
  if (std::pow(domain, static_cast<double>(rows)) > kBruteForceLimit) {
    throw CapacityError("brute force: |domain|^N' = " + std::to_string(domain) + "^" + std::to_string(rows) +
                        " exceeds 1e6");
  }
  std::vector<const query::Query*> queries;
  for (const auto& w : workloads) {
    query::validate(w, *schema);
    for (const auto& q : w.queries) queries.push_back(&q);
  }
  if (queries.size() != target.size()) throw ParameterError("brute force: target length mismatch");

  const std::size_t points = static_cast<std::size_t>(domain);
  // Decode a flat domain index into a row, last attribute fastest.
  auto decode = [&](std::size_t index, Dataset& d, std::size_t row) {
    for (std::size_t c = schema->size(); c-- > 0;) {
      const std::size_t k = (*schema)[c].cardinality();
      d.set(row, c, static_cast<double>(index % k));
      index /= k;
    }
  };

  std::vector<std::size_t> combo(rows, 0);
  Dataset current(schema, rows);
  Projection best{Dataset(schema, rows), std::numeric_limits<double>::infinity()};
  for (;;) {
    for (std::size_t r = 0; r < rows; ++r) decode(combo[r], current, r);
    double loss = 0.0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const double gap = target[i] - query::eval_query(*queries[i], current);
      loss += gap * gap;
    }
    if (loss < best.loss) {
      best.loss = loss;
      best.data = current;
    }
    // Next non-decreasing sequence.
    std::size_t i = rows;
    while (i > 0 && combo[i - 1] == points - 1) --i;
    if (i == 0) break;
    const std::size_t v = combo[i - 1] + 1;
    for (std::size_t j = i - 1; j < rows; ++j) combo[j] = v;
  }
  return best;
}

}  // namespace gsdsynth::eval
