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

// One-shot and adaptive private projection mechanisms. The sensitive data is
// reached only through a SensitiveSource, whose answers feed the Gaussian
// mechanism and the selection scores; the projection step sees only the
// noisy measurements.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gsdsynth/dataset.hpp"
#include "gsdsynth/dp_core.hpp"
#include "gsdsynth/errors.hpp"
#include "gsdsynth/evaluator.hpp"
#include "gsdsynth/gsd.hpp"
#include "gsdsynth/queries.hpp"
#include "gsdsynth/rng.hpp"

namespace gsdsynth::mech {

using data::Dataset;
using query::Workload;

template <typename S>
concept SensitiveSource = requires(const S& s, std::span<const Workload> w) {
  { s.rows() } -> std::convertible_to<std::size_t>;
  { s.schema_ptr() } -> std::convertible_to<data::SchemaPtr>;
  { s.answers(w) } -> std::convertible_to<std::vector<double>>;
};

class DatasetSource {
 public:
  explicit DatasetSource(const Dataset& data, WorkerPool* pool = nullptr) : data_(&data), pool_(pool) {}

  std::size_t rows() const { return data_->rows(); }
  const data::SchemaPtr& schema_ptr() const { return data_->schema_ptr(); }
  std::vector<double> answers(std::span<const Workload> workloads) const {
    return query::eval_workloads(workloads, *data_, pool_);
  }

 private:
  const Dataset* data_;
  WorkerPool* pool_;
};

struct Measurement {
  std::size_t workload_id = 0;
  std::vector<std::size_t> query_indices;
  std::vector<double> noisy_answers;  // clipped to [0, 1]
  double rho_spent = 0.0;
  double sigma = 0.0;
  std::size_t epoch = 0;
  std::size_t sample = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t sample = 0;
  std::size_t workload_id = 0;
  std::size_t query_index = 0;  // within the workload; 0 for workload selection
  double score = 0.0;           // true max error of the selected unit (not released)
  double projection_loss = 0.0;
};

struct MechanismResult {
  Dataset synthetic;
  dp::PrivacyLedger ledger;
  std::vector<Measurement> measurements;
  std::vector<EpochRecord> epochs;
};

enum class SelectionUnit { kWorkload, kQuery };
enum class MeasurementPolicy { kConcatenate, kReplaceLatest };

struct AdaptiveOptions {
  std::size_t epochs = 1;
  std::size_t samples = 1;
  SelectionUnit unit = SelectionUnit::kWorkload;
  MeasurementPolicy policy = MeasurementPolicy::kConcatenate;
  bool conservative_sensitivity = false;
};

using ProjectionTrace = std::function<void(std::size_t epoch, const gsd::GenerationStats&)>;

namespace detail {

// Stream tags for derive_seed.
inline constexpr std::uint64_t kMeasureStream = 0x6d656173;
inline constexpr std::uint64_t kSelectStream = 0x73656c65;
inline constexpr std::uint64_t kInitStream = 0x696e6974;
inline constexpr std::uint64_t kProjectStream = 0x70726f6a;

inline void clip_unit(std::vector<double>& v) {
  for (double& x : v) x = std::clamp(x, 0.0, 1.0);
}

inline double sensitivity_of(const Workload& w, bool conservative) {
  return conservative ? query::conservative_sensitivity(w) : query::workload_sensitivity(w);
}

inline gsd::TraceFn epoch_trace(const ProjectionTrace& trace, std::size_t epoch) {
  if (!trace) return {};
  return [&trace, epoch](const gsd::GenerationStats& s) { trace(epoch, s); };
}

}  // namespace detail

// Measures every workload once with the Gaussian mechanism at the full
// budget and projects. The whole answer vector is one release, so its
// sensitivity is sqrt(sum_w Delta_w^2) / N.
template <SensitiveSource Source>
MechanismResult one_shot(const Source& source, std::span<const Workload> workloads, double rho,
                         const gsd::GsdConfig& config, double delta = 1e-6, const ProjectionTrace& trace = {},
                         bool conservative_sensitivity = false) {
  if (!(rho > 0.0)) throw ParameterError("one_shot: rho must be positive");
  if (workloads.empty()) throw ParameterError("one_shot: no workloads");
  const std::size_t n = source.rows();
  if (n == 0) throw ParameterError("one_shot: sensitive dataset has no rows");

  double sq = 0.0;
  for (const auto& w : workloads) {
    const double s = detail::sensitivity_of(w, conservative_sensitivity);
    sq += s * s;
  }
  const double sensitivity = std::sqrt(sq) / static_cast<double>(n);

  const auto truth = source.answers(workloads);
  Rng rng(derive_seed(config.seed, {detail::kMeasureStream}));
  auto draw = dp::gaussian_mechanism(truth, sensitivity, rho, rng);
  detail::clip_unit(draw.values);

  MechanismResult result{Dataset{}, dp::PrivacyLedger(rho, delta), {}, {}};
  result.ledger.spend("measure one-shot", rho);

  std::size_t pos = 0;
  for (std::size_t w = 0; w < workloads.size(); ++w) {
    Measurement m;
    m.workload_id = w;
    m.rho_spent = rho;
    m.sigma = draw.sigma;
    for (std::size_t i = 0; i < workloads[w].size(); ++i) {
      m.query_indices.push_back(i);
      m.noisy_answers.push_back(draw.values[pos++]);
    }
    result.measurements.push_back(std::move(m));
  }

  auto run = gsd::run(config, source.schema_ptr(), workloads, draw.values, detail::epoch_trace(trace, 1));
  result.synthetic = std::move(run.best);
  result.epochs.push_back({1, 1, 0, 0, 0.0, run.loss});
  return result;
}

// Select-measure-project for `epochs` rounds of `samples` selections. Each
// selection (report noisy max over true max errors against the current
// synthetic data) and each measurement spends rho / (2 T S).
template <SensitiveSource Source>
MechanismResult adaptive(const Source& source, std::span<const Workload> workloads, double rho,
                         const AdaptiveOptions& options, const gsd::GsdConfig& config, double delta = 1e-6,
                         const ProjectionTrace& trace = {}) {
  if (!(rho > 0.0)) throw ParameterError("adaptive: rho must be positive");
  if (workloads.empty()) throw ParameterError("adaptive: no workloads");
  const double rho_call = dp::split_budget(rho, options.epochs, options.samples);
  const std::size_t n = source.rows();
  if (n == 0) throw ParameterError("adaptive: sensitive dataset has no rows");
  const double inv_n = 1.0 / static_cast<double>(n);
  const data::SchemaPtr schema = source.schema_ptr();

  const query::WorkloadEvaluator evaluator(*schema, workloads);
  const auto truth = source.answers(workloads);

  MechanismResult result{Dataset{}, dp::PrivacyLedger(rho, delta), {}, {}};
  {
    Rng rng(derive_seed(config.seed, {detail::kInitStream}));
    result.synthetic = Dataset::random(schema, config.synthetic_rows, rng);
  }

  for (std::size_t t = 1; t <= options.epochs; ++t) {
    const auto current = evaluator.answers(result.synthetic);
    for (std::size_t s = 1; s <= options.samples; ++s) {
      const std::string tag = "t=" + std::to_string(t) + "/s=" + std::to_string(s);
      Rng select_rng(derive_seed(config.seed, {detail::kSelectStream, t, s}));
      Rng measure_rng(derive_seed(config.seed, {detail::kMeasureStream, t, s}));

      Measurement m;
      m.epoch = t;
      m.sample = s;
      m.rho_spent = rho_call;
      EpochRecord rec{t, s, 0, 0, 0.0, 0.0};
      std::vector<double> selected_truth;
      double sensitivity = 0.0;

      if (options.unit == SelectionUnit::kWorkload) {
        std::vector<double> scores(workloads.size(), 0.0);
        for (std::size_t w = 0; w < workloads.size(); ++w) {
          const std::size_t off = evaluator.offset(w);
          for (std::size_t i = 0; i < workloads[w].size(); ++i) {
            scores[w] = std::max(scores[w], std::abs(truth[off + i] - current[off + i]));
          }
        }
        const std::size_t w = dp::report_noisy_max(scores, rho_call, n, select_rng);
        result.ledger.spend("select " + tag, rho_call);
        rec.workload_id = w;
        rec.score = scores[w];
        m.workload_id = w;
        const std::size_t off = evaluator.offset(w);
        for (std::size_t i = 0; i < workloads[w].size(); ++i) {
          m.query_indices.push_back(i);
          selected_truth.push_back(truth[off + i]);
        }
        sensitivity = detail::sensitivity_of(workloads[w], options.conservative_sensitivity) * inv_n;
      } else {
        std::vector<double> scores(truth.size());
        for (std::size_t i = 0; i < truth.size(); ++i) scores[i] = std::abs(truth[i] - current[i]);
        const std::size_t flat = dp::report_noisy_max(scores, rho_call, n, select_rng);
        result.ledger.spend("select " + tag, rho_call);
        std::size_t w = 0;
        while (w + 1 < workloads.size() && evaluator.offset(w + 1) <= flat) ++w;
        rec.workload_id = w;
        rec.query_index = flat - evaluator.offset(w);
        rec.score = scores[flat];
        m.workload_id = w;
        m.query_indices.push_back(rec.query_index);
        selected_truth.push_back(truth[flat]);
        sensitivity = inv_n;  // a single counting query moves by one row
      }

      auto draw = dp::gaussian_mechanism(selected_truth, sensitivity, rho_call, measure_rng);
      result.ledger.spend("measure " + tag, rho_call);
      detail::clip_unit(draw.values);
      m.sigma = draw.sigma;
      m.noisy_answers = std::move(draw.values);

      if (options.policy == MeasurementPolicy::kReplaceLatest) {
        std::erase_if(result.measurements, [&](const Measurement& old) {
          return old.workload_id == m.workload_id && old.query_indices == m.query_indices;
        });
      }
      result.measurements.push_back(std::move(m));
      result.epochs.push_back(rec);
    }

    // Project onto everything measured so far.
    std::vector<Workload> measured;
    std::vector<double> target;
    for (const Measurement& m : result.measurements) {
      const Workload& src = workloads[m.workload_id];
      Workload w;
      w.name = src.name;
      w.klass = query::WorkloadClass::kCustom;
      w.l2_sensitivity = src.l2_sensitivity;
      for (std::size_t i : m.query_indices) w.queries.push_back(src.queries[i]);
      measured.push_back(std::move(w));
      target.insert(target.end(), m.noisy_answers.begin(), m.noisy_answers.end());
    }
    gsd::GsdConfig epoch_config = config;
    epoch_config.seed = derive_seed(config.seed, {detail::kProjectStream, t});
    auto run = gsd::run(epoch_config, schema, measured, target, detail::epoch_trace(trace, t), &result.synthetic);
    result.synthetic = std::move(run.best);
    for (auto& rec : result.epochs) {
      if (rec.epoch == t) rec.projection_loss = run.loss;
    }
  }
  return result;
}

}  // namespace gsdsynth::mech
