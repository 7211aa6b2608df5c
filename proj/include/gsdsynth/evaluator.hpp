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

// Compiled evaluation of a workload list. Produces integer-valued count
// vectors (answers are counts / N) and supports updating a count vector in
// place when a single row changes, which is what the genetic optimizer does
// for every candidate.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "gsdsynth/dataset.hpp"
#include "gsdsynth/errors.hpp"
#include "gsdsynth/parallel.hpp"
#include "gsdsynth/queries.hpp"

namespace gsdsynth::query {

class WorkloadEvaluator {
 public:
  // Largest joint domain for which a marginal workload is counted through a
  // contingency table instead of query by query.
  static constexpr std::size_t kMaxTableCells = std::size_t{1} << 22;

  // `workloads` must outlive the evaluator.
  WorkloadEvaluator(const DomainSchema& schema, std::span<const Workload> workloads)
      : schema_(&schema), workloads_(workloads) {
    by_column_plans_.resize(schema.size());
    by_column_queries_.resize(schema.size());
    std::size_t pos = 0;
    for (const Workload& w : workloads) {
      validate(w, schema);
      offsets_.push_back(pos);
      if (!try_compile_table(w, pos)) {
        for (const Query& q : w.queries) {
          const std::size_t id = queries_.size();
          queries_.push_back({&q, pos++});
          for (std::size_t c : referenced_columns(q)) by_column_queries_[c].push_back(id);
        }
      } else {
        pos += w.size();
      }
    }
    size_ = pos;
  }

  std::size_t size() const { return size_; }
  std::size_t offset(std::size_t workload) const { return offsets_[workload]; }
  std::span<const Workload> workloads() const { return workloads_; }

  // Count of satisfying rows per query, in workload order.
  std::vector<double> counts(const Dataset& d, WorkerPool* pool = nullptr) const {
    if (!(d.schema() == *schema_)) throw ParameterError("evaluator: dataset schema mismatch");
    std::vector<double> out(size_, 0.0);
    const std::size_t units = tables_.size() + queries_.size();
    auto body = [&](std::size_t begin, std::size_t end, std::size_t) {
      std::vector<std::uint32_t> hist;
      for (std::size_t u = begin; u < end; ++u) {
        if (u < tables_.size()) {
          count_table(tables_[u], d, hist, out);
        } else {
          const QueryRef& q = queries_[u - tables_.size()];
          std::size_t n = 0;
          for (std::size_t r = 0; r < d.rows(); ++r) n += satisfies(*q.query, d, r) ? 1 : 0;
          out[q.pos] = static_cast<double>(n);
        }
      }
    };
    if (pool != nullptr) {
      pool->for_ranges(units, body);
    } else {
      body(0, units, 0);
    }
    return out;
  }

  // Proportions: counts / N.
  std::vector<double> answers(const Dataset& d, WorkerPool* pool = nullptr) const {
    auto out = counts(d, pool);
    const double n = static_cast<double>(d.rows());
    for (double& v : out) v /= n;
    return out;
  }

  // counts += contribution(new_row) - contribution(old_row).
  void apply_row_change(std::span<const double> old_row, std::span<const double> new_row,
                        std::span<double> counts) const {
    std::size_t changed = 0;
    std::size_t column = 0;
    for (std::size_t c = 0; c < old_row.size(); ++c) {
      if (old_row[c] != new_row[c]) {
        ++changed;
        column = c;
      }
    }
    if (changed == 0) return;
    if (changed == 1) {
      for (std::size_t t : by_column_plans_[column]) update_table(tables_[t], old_row, new_row, counts);
      for (std::size_t id : by_column_queries_[column]) update_query(queries_[id], old_row, new_row, counts);
    } else {
      for (const Table& t : tables_) update_table(t, old_row, new_row, counts);
      for (const QueryRef& q : queries_) update_query(q, old_row, new_row, counts);
    }
  }

 private:
  struct QueryRef {
    const Query* query;
    std::size_t pos;
  };

  // Contingency table for a workload of categorical marginals that share one
  // feature set. cell_begin/positions is a CSR map from table cell to the
  // answer positions asking for that cell.
  struct Table {
    std::vector<std::size_t> features;
    std::vector<std::size_t> strides;
    std::size_t cells = 0;
    std::vector<std::size_t> cell_begin;
    std::vector<std::size_t> positions;
  };

  std::vector<std::size_t> referenced_columns(const Query& q) const {
    return std::visit(
        [&](const auto& v) -> std::vector<std::size_t> {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, CategoricalMarginal>) {
            return v.features;
          } else if constexpr (std::is_same_v<T, Halfspace>) {
            std::vector<std::size_t> all(schema_->size());
            for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
            return all;
          } else {
            auto cols = v.cat_features;
            cols.insert(cols.end(), v.num_features.begin(), v.num_features.end());
            return cols;
          }
        },
        q);
  }

  bool try_compile_table(const Workload& w, std::size_t base) {
    if (w.queries.empty()) return false;
    const auto* first = std::get_if<CategoricalMarginal>(&w.queries.front());
    if (first == nullptr || first->features.empty()) return false;
    Table t;
    t.features = first->features;
    t.cells = 1;
    t.strides.assign(t.features.size(), 0);
    for (std::size_t i = t.features.size(); i-- > 0;) {
      t.strides[i] = t.cells;
      t.cells *= (*schema_)[t.features[i]].cardinality();
      if (t.cells > kMaxTableCells) return false;
    }
    std::vector<std::size_t> cell_of(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto* m = std::get_if<CategoricalMarginal>(&w.queries[i]);
      if (m == nullptr || m->features != t.features) return false;
      std::size_t cell = 0;
      for (std::size_t k = 0; k < m->values.size(); ++k) cell += m->values[k] * t.strides[k];
      cell_of[i] = cell;
    }
    t.cell_begin.assign(t.cells + 1, 0);
    for (std::size_t cell : cell_of) ++t.cell_begin[cell + 1];
    for (std::size_t c = 0; c < t.cells; ++c) t.cell_begin[c + 1] += t.cell_begin[c];
    t.positions.resize(w.size());
    std::vector<std::size_t> fill(t.cell_begin.begin(), t.cell_begin.end() - 1);
    for (std::size_t i = 0; i < w.size(); ++i) t.positions[fill[cell_of[i]]++] = base + i;
    const std::size_t id = tables_.size();
    for (std::size_t c : t.features) by_column_plans_[c].push_back(id);
    tables_.push_back(std::move(t));
    return true;
  }

  static std::size_t cell_of_row(const Table& t, std::span<const double> row) {
    std::size_t cell = 0;
    for (std::size_t k = 0; k < t.features.size(); ++k) {
      cell += static_cast<std::size_t>(row[t.features[k]]) * t.strides[k];
    }
    return cell;
  }

  static void count_table(const Table& t, const Dataset& d, std::vector<std::uint32_t>& hist,
                          std::vector<double>& out) {
    hist.assign(t.cells, 0);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      std::size_t cell = 0;
      for (std::size_t k = 0; k < t.features.size(); ++k) {
        cell += static_cast<std::size_t>(d.at(r, t.features[k])) * t.strides[k];
      }
      ++hist[cell];
    }
    for (std::size_t c = 0; c < t.cells; ++c) {
      for (std::size_t i = t.cell_begin[c]; i < t.cell_begin[c + 1]; ++i) {
        out[t.positions[i]] = static_cast<double>(hist[c]);
      }
    }
  }

  static void update_table(const Table& t, std::span<const double> old_row,
                           std::span<const double> new_row, std::span<double> counts) {
    const std::size_t a = cell_of_row(t, old_row);
    const std::size_t b = cell_of_row(t, new_row);
    if (a == b) return;
    for (std::size_t i = t.cell_begin[a]; i < t.cell_begin[a + 1]; ++i) counts[t.positions[i]] -= 1.0;
    for (std::size_t i = t.cell_begin[b]; i < t.cell_begin[b + 1]; ++i) counts[t.positions[i]] += 1.0;
  }

  void update_query(const QueryRef& q, std::span<const double> old_row,
                    std::span<const double> new_row, std::span<double> counts) const {
    const bool before = satisfies(*q.query, *schema_, old_row);
    const bool after = satisfies(*q.query, *schema_, new_row);
    if (before != after) counts[q.pos] += after ? 1.0 : -1.0;
  }

  const DomainSchema* schema_;
  std::span<const Workload> workloads_;
  std::vector<std::size_t> offsets_;
  std::vector<Table> tables_;
  std::vector<QueryRef> queries_;
  std::vector<std::vector<std::size_t>> by_column_plans_;
  std::vector<std::vector<std::size_t>> by_column_queries_;
  std::size_t size_ = 0;
};

// Concatenated answers of every query in every workload, in declared order.
inline std::vector<double> eval_workloads(std::span<const Workload> workloads, const Dataset& d,
                                          WorkerPool* pool = nullptr) {
  if (d.rows() == 0) throw ParameterError("eval_workloads: dataset has no rows");
  return WorkloadEvaluator(d.schema(), workloads).answers(d, pool);
}

}  // namespace gsdsynth::query
