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

// The four statistical-query families, grouped into workloads that carry an
// L2 sensitivity on the count scale (answers are proportions, so the
// sensitivity of a proportion vector is l2_sensitivity / N).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "gsdsynth/dataset.hpp"
#include "gsdsynth/errors.hpp"
#include "gsdsynth/rng.hpp"

namespace gsdsynth::query {

using data::Dataset;
using data::DomainSchema;

// x_S = c.
struct CategoricalMarginal {
  std::vector<std::size_t> features;
  std::vector<std::size_t> values;
  bool operator==(const CategoricalMarginal&) const = default;
};

// lo <= x <= hi, or lo <= x < hi when hi_closed is false.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  bool hi_closed = true;

  bool contains(double x) const { return x >= lo && (hi_closed ? x <= hi : x < hi); }
  bool operator==(const Interval&) const = default;
};

// x_C = y and x_j in interval_j for every j in R.
struct RangeMarginal {
  std::vector<std::size_t> cat_features;
  std::vector<std::size_t> cat_values;
  std::vector<std::size_t> num_features;
  std::vector<Interval> intervals;
  bool operator==(const RangeMarginal&) const = default;
};

// Optional categorical anchor x_C = y, and x_i <= tau_i (x_i < tau_i when
// strict) for every numeric feature i.
struct Prefix {
  std::vector<std::size_t> cat_features;
  std::vector<std::size_t> cat_values;
  std::vector<std::size_t> num_features;
  std::vector<double> thresholds;
  bool strict = false;
  bool operator==(const Prefix&) const = default;
};

// <theta, one_hot(x)> <= tau.
struct Halfspace {
  std::vector<double> theta;
  double tau = 0.0;
  bool operator==(const Halfspace&) const = default;
};

using Query = std::variant<CategoricalMarginal, RangeMarginal, Prefix, Halfspace>;

enum class WorkloadClass { kCategoricalMarginal, kBinaryTree, kPrefix, kHalfspace, kCustom };

struct Workload {
  std::string name;
  WorkloadClass klass = WorkloadClass::kCustom;
  std::vector<Query> queries;
  // Count-scale L2 sensitivity under replacement of one row.
  double l2_sensitivity = 1.0;

  std::size_t size() const { return queries.size(); }
  bool operator==(const Workload&) const = default;
};

inline double workload_sensitivity(const Workload& w) { return w.l2_sensitivity; }

// Per-query bound: each query moves by at most one count under replacement,
// so an m-query vector moves by at most sqrt(m). For the random prefix and
// halfspace classes the declared value 1 is much smaller than this.
inline double conservative_sensitivity(const Workload& w) {
  switch (w.klass) {
    case WorkloadClass::kPrefix:
    case WorkloadClass::kHalfspace:
      return std::sqrt(static_cast<double>(std::max<std::size_t>(1, w.size())));
    default:
      return w.l2_sensitivity;
  }
}

inline std::size_t total_queries(std::span<const Workload> workloads) {
  std::size_t m = 0;
  for (const auto& w : workloads) m += w.size();
  return m;
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline void check_features(const DomainSchema& schema, const std::vector<std::size_t>& features,
                           bool categorical, const char* what) {
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::size_t f = features[i];
    if (f >= schema.size()) {
      throw ParameterError(std::string(what) + ": feature index " + std::to_string(f) + " out of range");
    }
    if (schema[f].is_categorical() != categorical) {
      throw ParameterError(std::string(what) + ": attribute '" + schema[f].name + "' is not " +
                           (categorical ? "categorical" : "numeric"));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (features[j] == f) {
        throw ParameterError(std::string(what) + ": attribute '" + schema[f].name + "' repeated");
      }
    }
  }
}

inline void check_cat_values(const DomainSchema& schema, const std::vector<std::size_t>& features,
                             const std::vector<std::size_t>& values, const char* what) {
  if (features.size() != values.size()) {
    throw ParameterError(std::string(what) + ": categorical features and values differ in length");
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (values[i] >= schema[features[i]].cardinality()) {
      throw ParameterError(std::string(what) + ": value " + std::to_string(values[i]) +
                           " outside the domain of '" + schema[features[i]].name + "'");
    }
  }
}

}  // namespace detail

inline void validate(const Query& q, const DomainSchema& schema) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CategoricalMarginal>) {
          detail::check_features(schema, v.features, true, "categorical marginal");
          detail::check_cat_values(schema, v.features, v.values, "categorical marginal");
        } else if constexpr (std::is_same_v<T, RangeMarginal>) {
          detail::check_features(schema, v.cat_features, true, "range marginal");
          detail::check_cat_values(schema, v.cat_features, v.cat_values, "range marginal");
          detail::check_features(schema, v.num_features, false, "range marginal");
          if (v.num_features.size() != v.intervals.size()) {
            throw ParameterError("range marginal: numeric features and intervals differ in length");
          }
          for (const Interval& iv : v.intervals) {
            if (!(iv.lo <= iv.hi)) throw ParameterError("range marginal: interval with lo > hi");
          }
        } else if constexpr (std::is_same_v<T, Prefix>) {
          detail::check_features(schema, v.cat_features, true, "prefix");
          detail::check_cat_values(schema, v.cat_features, v.cat_values, "prefix");
          detail::check_features(schema, v.num_features, false, "prefix");
          if (v.num_features.size() != v.thresholds.size()) {
            throw ParameterError("prefix: numeric features and thresholds differ in length");
          }
          for (double t : v.thresholds) {
            if (!std::isfinite(t)) throw ParameterError("prefix: non-finite threshold");
          }
        } else {
          if (v.theta.size() != schema.one_hot_dim()) {
            throw ParameterError("halfspace: theta has length " + std::to_string(v.theta.size()) +
                                 ", expected one-hot dimension " + std::to_string(schema.one_hot_dim()));
          }
          if (!std::isfinite(v.tau)) throw ParameterError("halfspace: non-finite tau");
        }
      },
      q);
}

inline void validate(const Workload& w, const DomainSchema& schema) {
  for (const Query& q : w.queries) validate(q, schema);
  if (!(w.l2_sensitivity > 0.0)) throw ParameterError("workload '" + w.name + "': sensitivity must be positive");
}

// ---------------------------------------------------------------------------
// Predicates. `cell(c)` returns the value of attribute c for the row under test.

template <typename Cell>
bool satisfies(const Query& q, const DomainSchema& schema, const Cell& cell) {
  return std::visit(
      [&](const auto& v) -> bool {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CategoricalMarginal>) {
          for (std::size_t i = 0; i < v.features.size(); ++i) {
            if (cell(v.features[i]) != static_cast<double>(v.values[i])) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, RangeMarginal>) {
          for (std::size_t i = 0; i < v.cat_features.size(); ++i) {
            if (cell(v.cat_features[i]) != static_cast<double>(v.cat_values[i])) return false;
          }
          for (std::size_t i = 0; i < v.num_features.size(); ++i) {
            if (!v.intervals[i].contains(cell(v.num_features[i]))) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, Prefix>) {
          for (std::size_t i = 0; i < v.cat_features.size(); ++i) {
            if (cell(v.cat_features[i]) != static_cast<double>(v.cat_values[i])) return false;
          }
          for (std::size_t i = 0; i < v.num_features.size(); ++i) {
            const double x = cell(v.num_features[i]);
            if (v.strict ? !(x < v.thresholds[i]) : !(x <= v.thresholds[i])) return false;
          }
          return true;
        } else {
          // Sparse dot product with the one-hot encoding.
          double dot = 0.0;
          for (std::size_t c = 0; c < schema.size(); ++c) {
            const std::size_t off = schema.one_hot_offset(c);
            if (schema[c].is_categorical()) {
              dot += v.theta[off + static_cast<std::size_t>(cell(c))];
            } else {
              dot += v.theta[off] * cell(c);
            }
          }
          return dot <= v.tau;
        }
      },
      q);
}

inline bool satisfies(const Query& q, const Dataset& d, std::size_t row) {
  return satisfies(q, d.schema(), [&](std::size_t c) { return d.at(row, c); });
}

inline bool satisfies(const Query& q, const DomainSchema& schema, std::span<const double> row) {
  return satisfies(q, schema, [&](std::size_t c) { return row[c]; });
}

// Fraction of rows satisfying the query's predicate, by direct row scan.
inline double eval_query(const Query& q, const Dataset& d) {
  validate(q, d.schema());
  if (d.rows() == 0) throw ParameterError("eval_query: dataset has no rows");
  std::size_t count = 0;
  for (std::size_t r = 0; r < d.rows(); ++r) count += satisfies(q, d, r) ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(d.rows());
}

// ---------------------------------------------------------------------------
// Workload generators

namespace detail {

// All size-k subsets of {0..n-1} in lexicographic order.
inline std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (k > n) return out;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    out.push_back(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

// Odometer step over a mixed-radix index, last digit fastest. Returns false
// after wrapping past the final combination.
template <typename Radix>
bool advance(std::vector<std::size_t>& digits, const Radix& radix) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (++digits[i] < radix(i)) return true;
    digits[i] = 0;
  }
  return false;
}

inline std::string join_names(const DomainSchema& schema, const std::vector<std::size_t>& attrs) {
  std::string s;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (i) s += ',';
    s += schema[attrs[i]].name;
  }
  return s;
}

}  // namespace detail

// One workload per size-k subset of the categorical attributes, enumerating
// the full product domain (last attribute varies fastest).
inline std::vector<Workload> gen_categorical_marginal_workloads(const DomainSchema& schema, std::size_t k) {
  const auto& cats = schema.categorical_indices();
  if (k == 0) throw ParameterError("categorical marginals: k must be positive");
  if (k > cats.size()) {
    throw ParameterError("categorical marginals: k=" + std::to_string(k) + " exceeds the " +
                         std::to_string(cats.size()) + " categorical attributes");
  }
  std::vector<Workload> out;
  for (const auto& subset : detail::combinations(cats.size(), k)) {
    std::vector<std::size_t> features;
    for (std::size_t i : subset) features.push_back(cats[i]);
    Workload w;
    w.name = "cat:" + detail::join_names(schema, features);
    w.klass = WorkloadClass::kCategoricalMarginal;
    w.l2_sensitivity = std::sqrt(2.0);
    std::vector<std::size_t> values(k, 0);
    do {
      w.queries.emplace_back(CategoricalMarginal{features, values});
    } while (detail::advance(values, [&](std::size_t i) { return schema[features[i]].cardinality(); }));
    out.push_back(std::move(w));
  }
  return out;
}

// Dyadic intervals [i/2^j, (i+1)/2^j] at level j. All but the last are
// half-open on the right so each point of [0, 1] lies in exactly one.
inline std::vector<Interval> dyadic_intervals(std::size_t level) {
  const std::size_t n = std::size_t{1} << level;
  const double width = 1.0 / static_cast<double>(n);
  std::vector<Interval> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({static_cast<double>(i) * width, static_cast<double>(i + 1) * width, i + 1 == n});
  }
  return out;
}

// One workload per (categorical attribute, (k-1)-subset of numeric
// attributes). For each category value and each level j the workload holds
// the grid of level-j dyadic cells over the numeric attributes, so a row lands
// in exactly one query per level: sensitivity sqrt(2 * levels).
inline std::vector<Workload> gen_binary_tree_workloads(const DomainSchema& schema, std::size_t k,
                                                       std::size_t levels = 5) {
  const auto& cats = schema.categorical_indices();
  const auto& nums = schema.numeric_indices();
  if (k < 2) throw ParameterError("binary-tree marginals: k must be at least 2");
  if (levels == 0 || levels > 20) throw ParameterError("binary-tree marginals: levels must be in [1, 20]");
  if (cats.empty() || nums.size() < k - 1) {
    throw ParameterError("binary-tree marginals: need 1 categorical and " + std::to_string(k - 1) +
                         " numeric attributes");
  }
  std::vector<Workload> out;
  for (std::size_t c : cats) {
    for (const auto& subset : detail::combinations(nums.size(), k - 1)) {
      std::vector<std::size_t> num_features;
      for (std::size_t i : subset) num_features.push_back(nums[i]);
      Workload w;
      w.name = "bt:" + schema[c].name + "|" + detail::join_names(schema, num_features);
      w.klass = WorkloadClass::kBinaryTree;
      w.l2_sensitivity = std::sqrt(2.0 * static_cast<double>(levels));
      for (std::size_t y = 0; y < schema[c].cardinality(); ++y) {
        for (std::size_t j = 1; j <= levels; ++j) {
          const auto level = dyadic_intervals(j);
          std::vector<std::size_t> cell(num_features.size(), 0);
          do {
            RangeMarginal q{{c}, {y}, num_features, {}};
            for (std::size_t i : cell) q.intervals.push_back(level[i]);
            w.queries.emplace_back(std::move(q));
          } while (detail::advance(cell, [&](std::size_t) { return level.size(); }));
        }
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

// m queries x_c = v and x_a < tau_a and x_b < tau_b with c, v, a != b and the
// thresholds drawn uniformly.
inline Workload gen_random_prefixes(const DomainSchema& schema, std::size_t m, Rng& rng) {
  const auto& cats = schema.categorical_indices();
  const auto& nums = schema.numeric_indices();
  if (cats.empty() || nums.size() < 2) {
    throw ParameterError("random prefixes: need 1 categorical and 2 numeric attributes");
  }
  Workload w;
  w.name = "prefixes:m=" + std::to_string(m);
  w.klass = WorkloadClass::kPrefix;
  w.l2_sensitivity = 1.0;
  w.queries.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t c = cats[rng.below(cats.size())];
    const std::size_t v = rng.below(schema[c].cardinality());
    const std::size_t ia = rng.below(nums.size());
    std::size_t ib = rng.below(nums.size() - 1);
    if (ib >= ia) ++ib;
    const double ta = rng.uniform();
    const double tb = rng.uniform();
    w.queries.emplace_back(Prefix{{c}, {v}, {nums[ia], nums[ib]}, {ta, tb}, true});
  }
  return w;
}

// m queries <theta, one_hot(x)> <= tau with theta_i ~ N(0, 1/d) over the
// one-hot dimension (d = attribute count) and tau ~ N(0, 1).
inline Workload gen_random_halfspaces(const DomainSchema& schema, std::size_t m, Rng& rng) {
  if (schema.size() == 0) throw ParameterError("random halfspaces: empty schema");
  const double scale = std::sqrt(1.0 / static_cast<double>(schema.size()));
  Workload w;
  w.name = "halfspaces:m=" + std::to_string(m);
  w.klass = WorkloadClass::kHalfspace;
  w.l2_sensitivity = 1.0;
  w.queries.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    Halfspace h;
    h.theta.resize(schema.one_hot_dim());
    for (double& t : h.theta) t = scale * rng.normal();
    h.tau = rng.normal();
    w.queries.emplace_back(std::move(h));
  }
  return w;
}

}  // namespace gsdsynth::query
