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

// Genetic projection optimizer. Evolves candidate synthetic datasets so that
// their query answers approach a (noisy) target vector under squared L2 loss.
//
// Every generation builds p_mut mutation candidates and p_cross crossover
// candidates from the incumbent, scores them together with the current
// elites, and keeps the best `elite_size`. Candidates are represented as a
// short list of cell edits against a parent elite and scored by updating the
// parent's cached count vector row by row, so a candidate costs
// O(edits * affected queries + m) instead of a full O(N' * m) evaluation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsdsynth/dataset.hpp"
#include "gsdsynth/errors.hpp"
#include "gsdsynth/evaluator.hpp"
#include "gsdsynth/parallel.hpp"
#include "gsdsynth/queries.hpp"
#include "gsdsynth/rng.hpp"

namespace gsdsynth::gsd {

using data::Dataset;
using query::Workload;

enum class CandidateScheme {
  // Every candidate is a sparse mutation or a cell crossover of the incumbent.
  kIncumbent,
  // Older variant: pick two elites, replace a row of the first with a row of
  // the second, then mutate.
  kEliteRowCrossThenMutate,
};

struct GsdConfig {
  std::size_t synthetic_rows = 1000;
  std::size_t max_generations = 100000;
  std::size_t p_mut = 100;
  std::size_t p_cross = 100;
  std::size_t elite_size = 2;
  std::size_t mutation_rate = 1;
  std::size_t crossover_rate = 1;
  // Relative loss improvement over the window below which the run stops.
  // Zero disables the rule.
  double early_stop_threshold = 1e-4;
  // 0 means "same as synthetic_rows".
  std::size_t early_stop_window = 0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  CandidateScheme scheme = CandidateScheme::kIncumbent;

  std::size_t window() const { return early_stop_window == 0 ? synthetic_rows : early_stop_window; }

  void validate() const {
    if (synthetic_rows == 0) throw ParameterError("gsd: synthetic_rows must be positive");
    if (elite_size == 0) throw ParameterError("gsd: elite_size must be at least 1");
    if (p_mut + p_cross == 0) throw ParameterError("gsd: p_mut + p_cross must be at least 1");
    if (mutation_rate == 0 || crossover_rate == 0) throw ParameterError("gsd: rates must be at least 1");
    if (!(early_stop_threshold >= 0.0)) throw ParameterError("gsd: early_stop_threshold must be >= 0");
  }
};

struct CellEdit {
  std::size_t row;
  std::size_t col;
  double value;
};

// ---------------------------------------------------------------------------
// Fitness

// sum_i (target_i - counts_i / n)^2, accumulated in index order.
inline double squared_loss(std::span<const double> counts, std::span<const double> target,
                           std::size_t n_rows) {
  const double n = static_cast<double>(n_rows);
  double loss = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double r = target[i] - counts[i] / n;
    loss += r * r;
  }
  return loss;
}

inline double fitness(const Dataset& candidate, std::span<const Workload> workloads,
                      std::span<const double> target) {
  query::WorkloadEvaluator eval(candidate.schema(), workloads);
  if (target.size() != eval.size()) {
    throw ParameterError("fitness: target has " + std::to_string(target.size()) + " entries, workloads have " +
                         std::to_string(eval.size()) + " queries");
  }
  if (candidate.rows() == 0) throw ParameterError("fitness: candidate has no rows");
  return squared_loss(eval.counts(candidate), target, candidate.rows());
}

// ---------------------------------------------------------------------------
// Genetic operators

// `rate` distinct cells, each resampled uniformly from its attribute domain
// (the draw may reproduce the current value).
inline std::vector<CellEdit> mutation_edits(const Dataset& best, std::size_t rate, Rng& rng) {
  const std::size_t cells = best.rows() * best.cols();
  rate = std::min(rate, cells);
  std::vector<CellEdit> edits;
  edits.reserve(rate);
  std::vector<std::size_t> picked;
  picked.reserve(rate);
  while (edits.size() < rate) {
    const std::size_t flat = rng.below(cells);
    if (std::find(picked.begin(), picked.end(), flat) != picked.end()) continue;
    picked.push_back(flat);
    const std::size_t row = flat / best.cols();
    const std::size_t col = flat % best.cols();
    edits.push_back({row, col, best.schema().sample_value(col, rng)});
  }
  return edits;
}

// `rate` entries (i1, j) <- donor(i2, j) with i1, i2, j uniform.
inline std::vector<CellEdit> crossover_edits(const Dataset& best, const Dataset& donor, std::size_t rate,
                                             Rng& rng) {
  if (!(best.schema() == donor.schema()) || best.rows() != donor.rows()) {
    throw ParameterError("crossover: parents differ in schema or row count");
  }
  std::vector<CellEdit> edits;
  edits.reserve(rate);
  for (std::size_t k = 0; k < rate; ++k) {
    const std::size_t target_row = rng.below(best.rows());
    const std::size_t donor_row = rng.below(best.rows());
    const std::size_t col = rng.below(best.cols());
    edits.push_back({target_row, col, donor.at(donor_row, col)});
  }
  return edits;
}

inline void apply_edits(Dataset& d, std::span<const CellEdit> edits) {
  for (const CellEdit& e : edits) d.set(e.row, e.col, e.value);
}

inline Dataset mutate(const Dataset& best, std::size_t rate, Rng& rng) {
  Dataset out = best;
  const auto edits = mutation_edits(best, rate, rng);
  apply_edits(out, edits);
  return out;
}

inline Dataset crossover(const Dataset& best, const Dataset& donor, std::size_t rate, Rng& rng) {
  Dataset out = best;
  const auto edits = crossover_edits(best, donor, rate, rng);
  apply_edits(out, edits);
  return out;
}

// ---------------------------------------------------------------------------
// Early stop

// Fires when the relative improvement over the last `window` generations is
// below `threshold`. history[g] is the incumbent loss after generation g.
inline bool early_stop_check(std::span<const double> history, std::size_t window, double threshold) {
  if (window == 0 || history.size() <= window) return false;
  const double then = history[history.size() - 1 - window];
  const double now = history.back();
  // A zero loss cannot improve. Dividing by `then` itself keeps the ratio
  // exact for subnormal losses.
  if (!(then > 0.0)) return true;
  return (then - now) / then < threshold;
}

// ---------------------------------------------------------------------------
// Elite set

struct EliteMember {
  Dataset data;
  std::vector<double> counts;
  double loss = 0.0;
  std::uint64_t created = 0;
};

// Sorted ascending by loss; members[0] is the incumbent.
struct EliteSet {
  std::vector<EliteMember> members;

  const EliteMember& best() const { return members.front(); }
  std::size_t size() const { return members.size(); }
};

// Ranking used for elite selection: lower loss first, and among equal losses
// the most recently created candidate first.
inline bool ranks_before(double loss_a, std::uint64_t created_a, double loss_b, std::uint64_t created_b) {
  if (loss_a != loss_b) return loss_a < loss_b;
  return created_a > created_b;
}

struct GenerationStats {
  std::size_t generation = 0;
  double best_loss = 0.0;
  double population_best = 0.0;
  double population_worst = 0.0;
};

using TraceFn = std::function<void(const GenerationStats&)>;

struct RunResult {
  Dataset best;
  double loss = 0.0;
  double initial_loss = 0.0;
  std::size_t generations = 0;
  bool early_stopped = false;
  // history[0] is the initial incumbent loss, history[g] the loss after g.
  std::vector<double> loss_history;
  EliteSet elites;
};

namespace detail {

struct Candidate {
  std::size_t parent = 0;
  std::vector<CellEdit> edits;
  double loss = 0.0;
};

// parent counts + the effect of `edits`, written into `counts`.
inline void candidate_counts(const query::WorkloadEvaluator& eval, const EliteMember& parent,
                             std::span<const CellEdit> edits, std::vector<double>& counts,
                             std::vector<double>& old_row, std::vector<double>& new_row,
                             std::vector<std::size_t>& rows_seen) {
  counts.assign(parent.counts.begin(), parent.counts.end());
  rows_seen.clear();
  for (const CellEdit& e : edits) {
    if (std::find(rows_seen.begin(), rows_seen.end(), e.row) != rows_seen.end()) continue;
    rows_seen.push_back(e.row);
    old_row.resize(parent.data.cols());
    parent.data.row_into(e.row, old_row);
    new_row = old_row;
    for (const CellEdit& f : edits) {
      if (f.row == e.row) new_row[f.col] = f.value;
    }
    eval.apply_row_change(old_row, new_row, counts);
  }
}

}  // namespace detail

// Runs the optimizer against `target` (one entry per query of `workloads`).
// `init`, when given, seeds elite 0; the remaining elites are uniform draws.
inline RunResult run(const GsdConfig& config, const data::SchemaPtr& schema,
                     std::span<const Workload> workloads, std::span<const double> target,
                     const TraceFn& trace = {}, const Dataset* init = nullptr) {
  config.validate();
  for (double t : target) {
    if (!std::isfinite(t)) throw ParameterError("gsd: target answers must be finite");
  }
  const query::WorkloadEvaluator eval(*schema, workloads);
  if (target.size() != eval.size()) {
    throw ParameterError("gsd: target has " + std::to_string(target.size()) + " entries, workloads have " +
                         std::to_string(eval.size()) + " queries");
  }
  if (init != nullptr) {
    if (!(init->schema() == *schema) || init->rows() != config.synthetic_rows) {
      throw ParameterError("gsd: initial dataset does not match schema or synthetic_rows");
    }
    init->validate();
  }
  if (schema->size() == 0) throw ParameterError("gsd: empty schema");

  WorkerPool pool(config.threads);
  const std::size_t n = config.synthetic_rows;
  constexpr std::uint64_t kInitStream = ~std::uint64_t{0};

  EliteSet elites;
  for (std::size_t e = 0; e < config.elite_size; ++e) {
    EliteMember m;
    if (e == 0 && init != nullptr) {
      m.data = *init;
    } else {
      Rng rng(derive_seed(config.seed, {kInitStream, e}));
      m.data = Dataset::random(schema, n, rng);
    }
    m.counts = eval.counts(m.data, &pool);
    m.loss = squared_loss(m.counts, target, n);
    m.created = e;
    elites.members.push_back(std::move(m));
  }
  auto by_rank = [](const EliteMember& a, const EliteMember& b) {
    return ranks_before(a.loss, a.created, b.loss, b.created);
  };
  std::sort(elites.members.begin(), elites.members.end(), by_rank);
  std::uint64_t next_id = config.elite_size;

  RunResult result;
  result.initial_loss = elites.best().loss;
  result.loss_history.push_back(elites.best().loss);

  const std::size_t population = config.p_mut + config.p_cross;
  std::vector<detail::Candidate> candidates(population);

  struct Scratch {
    std::vector<double> counts, old_row, new_row;
    std::vector<std::size_t> rows_seen;
  };
  std::vector<Scratch> scratch(pool.size());

  for (std::size_t g = 1; g <= config.max_generations; ++g) {
    if (elites.best().loss == 0.0) break;

    pool.for_ranges(population, [&](std::size_t begin, std::size_t end, std::size_t worker) {
      Scratch& s = scratch[worker];
      for (std::size_t c = begin; c < end; ++c) {
        Rng rng(derive_seed(config.seed, {g, c}));
        detail::Candidate& cand = candidates[c];
        if (config.scheme == CandidateScheme::kIncumbent) {
          cand.parent = 0;
          if (c < config.p_mut) {
            cand.edits = mutation_edits(elites.members[0].data, config.mutation_rate, rng);
          } else {
            const std::size_t donor = rng.below(elites.size());
            cand.edits = crossover_edits(elites.members[0].data, elites.members[donor].data,
                                         config.crossover_rate, rng);
          }
        } else {
          const std::size_t a = rng.below(elites.size());
          const std::size_t b = rng.below(elites.size());
          const Dataset& da = elites.members[a].data;
          const Dataset& db = elites.members[b].data;
          const std::size_t ra = rng.below(n);
          const std::size_t rb = rng.below(n);
          cand.parent = a;
          cand.edits.clear();
          for (std::size_t col = 0; col < da.cols(); ++col) cand.edits.push_back({ra, col, db.at(rb, col)});
          const auto mut = mutation_edits(da, config.mutation_rate, rng);
          cand.edits.insert(cand.edits.end(), mut.begin(), mut.end());
        }
        detail::candidate_counts(eval, elites.members[cand.parent], cand.edits, s.counts, s.old_row,
                                 s.new_row, s.rows_seen);
        cand.loss = squared_loss(s.counts, target, n);
      }
    });

    // Rank elites (indices [0, E)) and candidates (indices [E, E + P)).
    const std::size_t total = elites.size() + population;
    auto loss_of = [&](std::size_t i) {
      return i < elites.size() ? elites.members[i].loss : candidates[i - elites.size()].loss;
    };
    auto id_of = [&](std::size_t i) {
      return i < elites.size() ? elites.members[i].created : next_id + (i - elites.size());
    };
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t keep = std::min(config.elite_size, total);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) { return ranks_before(loss_of(a), id_of(a), loss_of(b), id_of(b)); });

    GenerationStats stats;
    stats.generation = g;
    stats.population_best = loss_of(order.front());
    stats.population_worst = stats.population_best;
    for (std::size_t i = 0; i < total; ++i) stats.population_worst = std::max(stats.population_worst, loss_of(i));

    EliteSet next;
    Scratch& s = scratch[0];
    for (std::size_t k = 0; k < keep; ++k) {
      const std::size_t i = order[k];
      if (i < elites.size()) {
        next.members.push_back(elites.members[i]);
        continue;
      }
      const detail::Candidate& cand = candidates[i - elites.size()];
      const EliteMember& parent = elites.members[cand.parent];
      EliteMember m;
      m.data = parent.data;
      apply_edits(m.data, cand.edits);
      detail::candidate_counts(eval, parent, cand.edits, s.counts, s.old_row, s.new_row, s.rows_seen);
      m.counts = s.counts;
      m.loss = cand.loss;
      m.created = id_of(i);
      next.members.push_back(std::move(m));
    }
    elites = std::move(next);
    next_id += population;

    result.loss_history.push_back(elites.best().loss);
    result.generations = g;
    stats.best_loss = elites.best().loss;
    if (trace) trace(stats);

    if (config.early_stop_threshold > 0.0 &&
        early_stop_check(result.loss_history, config.window(), config.early_stop_threshold)) {
      result.early_stopped = true;
      break;
    }
  }

  result.best = elites.best().data;
  result.loss = elites.best().loss;
  result.elites = std::move(elites);
  return result;
}

}  // namespace gsdsynth::gsd
