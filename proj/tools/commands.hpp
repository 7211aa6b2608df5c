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

// Subcommands of the gsdsynth command-line tool. Kept in a header so tests
// can drive them in-process; main.cpp only forwards argv.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gsdsynth/gsdsynth.hpp"

namespace gsdsynth::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Usage errors exit with status 2; everything else thrown from a stage exits 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what) : std::runtime_error(stage + ": " + what) {}
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void require_file(const std::string& what, const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw UsageError(what + " file not found: " + path);
}

// Runs `fn`, tagging anything it throws with the stage name.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const UsageError&) {
    throw;
  } catch (const ParameterError& e) {
    throw UsageError(name + ": " + e.what());
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

struct Inputs {
  data::SchemaPtr schema;
  data::LoadedData original;
  std::vector<query::Workload> workloads;
};

inline Inputs load_inputs(const std::string& data_path, const std::string& schema_path, const std::string& queries,
                          const std::string& manifest_path, std::uint64_t seed) {
  require_file("schema", schema_path);
  require_file("data", data_path);
  if (queries.empty() == manifest_path.empty()) {
    throw UsageError("exactly one of --queries and --workload-manifest is required");
  }
  if (!manifest_path.empty()) require_file("workload manifest", manifest_path);
  Inputs in;
  in.schema = stage("load schema", [&] { return data::load_schema(schema_path); });
  in.original = stage("load data", [&] { return data::load_csv(data_path, in.schema, true); });
  in.workloads = stage("build workloads", [&] {
    return manifest_path.empty() ? io::build_workloads(queries, *in.schema, seed)
                                 : io::load_workloads(manifest_path, *in.schema);
  });
  if (in.workloads.empty()) throw UsageError("build workloads: the query spec produced no workloads");
  return in;
}

struct Errors {
  double max_error = 0.0;
  double avg_error = 0.0;
  std::vector<eval::WorkloadErrors> per_workload;
};

// Errors of a synthetic CSV read back with the original's normalization.
inline Errors file_errors(const Inputs& in, const std::string& synthetic_path, bool per_workload) {
  const auto synthetic =
      stage("load synthetic", [&] { return data::load_csv(synthetic_path, in.schema, true, &in.original.params); });
  return stage("evaluate", [&] {
    Errors e;
    e.max_error = eval::max_error(in.workloads, in.original.data, synthetic.data);
    e.avg_error = eval::avg_error(in.workloads, in.original.data, synthetic.data);
    if (per_workload) e.per_workload = eval::per_workload_errors(in.workloads, in.original.data, synthetic.data);
    return e;
  });
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << text;
  if (!f) throw IoError("failed writing '" + path + "'");
}

inline void add_gsd_options(CLI::App& app, gsd::GsdConfig& c) {
  app.add_option("--rows", c.synthetic_rows, "Synthetic rows N'")->check(CLI::PositiveNumber);
  app.add_option("--generations", c.max_generations, "Generation cap per projection");
  app.add_option("--p-mut", c.p_mut, "Mutation candidates per generation");
  app.add_option("--p-cross", c.p_cross, "Crossover candidates per generation");
  app.add_option("--elite", c.elite_size, "Elite set size")->check(CLI::PositiveNumber);
  app.add_option("--mutation-rate", c.mutation_rate, "Cells resampled per mutation")->check(CLI::PositiveNumber);
  app.add_option("--crossover-rate", c.crossover_rate, "Cells copied per crossover")->check(CLI::PositiveNumber);
  app.add_option("--early-stop", c.early_stop_threshold, "Relative-improvement threshold (0 disables)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--early-stop-window", c.early_stop_window, "Window in generations (0: N')");
  app.add_option("--threads", c.threads, "Worker threads (default: GSDSYNTH_THREADS or hardware)")
      ->check(CLI::PositiveNumber);
}

inline nlohmann::json gsd_json(const gsd::GsdConfig& c) {
  // Thread count is left out: it does not affect any output.
  return {{"synthetic_rows", c.synthetic_rows},
          {"max_generations", c.max_generations},
          {"p_mut", c.p_mut},
          {"p_cross", c.p_cross},
          {"elite_size", c.elite_size},
          {"mutation_rate", c.mutation_rate},
          {"crossover_rate", c.crossover_rate},
          {"early_stop_threshold", c.early_stop_threshold},
          {"early_stop_window", c.window()},
          {"scheme", c.scheme == gsd::CandidateScheme::kIncumbent ? "incumbent" : "elite-row-cross-then-mutate"}};
}

}  // namespace detail

struct GenerateArgs {
  std::string data, schema, queries, workload_manifest, out, trace;
  std::string mode = "adaptive";
  std::optional<double> rho, epsilon;
  double delta = 1e-6;
  std::size_t epochs = 1, samples = 1;
  std::uint64_t seed = 0;
  std::string select = "workload";
  std::string measurements = "concat";
  std::string scheme = "incumbent";
  bool conservative = false;
  gsd::GsdConfig gsd;
};

inline int generate(const GenerateArgs& a, std::ostream& out) {
  if (a.rho.has_value() == a.epsilon.has_value()) throw UsageError("give exactly one of --rho and --epsilon");
  const double rho = a.rho ? *a.rho : detail::stage("privacy", [&] { return dp::dp_to_zcdp(*a.epsilon, a.delta); });
  if (!(rho > 0.0)) throw UsageError("--rho must be positive");
  auto in = detail::load_inputs(a.data, a.schema, a.queries, a.workload_manifest, a.seed);

  gsd::GsdConfig config = a.gsd;
  config.seed = a.seed;
  config.scheme = a.scheme == "incumbent" ? gsd::CandidateScheme::kIncumbent
                                          : gsd::CandidateScheme::kEliteRowCrossThenMutate;
  detail::stage("configure", [&] { config.validate(); });

  std::ofstream trace_file;
  if (!a.trace.empty()) {
    trace_file.open(a.trace, std::ios::binary | std::ios::trunc);
    if (!trace_file) throw StageError("open trace", "cannot write '" + a.trace + "'");
  }
  mech::ProjectionTrace trace;
  if (trace_file.is_open()) {
    trace = [&](std::size_t epoch, const gsd::GenerationStats& s) {
      trace_file << nlohmann::json{{"epoch", epoch},
                                   {"generation", s.generation},
                                   {"best_loss", s.best_loss},
                                   {"population_best", s.population_best},
                                   {"population_worst", s.population_worst}}
                        .dump()
                 << '\n';
    };
  }

  mech::AdaptiveOptions opts;
  opts.epochs = a.epochs;
  opts.samples = a.samples;
  opts.unit = a.select == "query" ? mech::SelectionUnit::kQuery : mech::SelectionUnit::kWorkload;
  opts.policy = a.measurements == "replace" ? mech::MeasurementPolicy::kReplaceLatest
                                            : mech::MeasurementPolicy::kConcatenate;
  opts.conservative_sensitivity = a.conservative;

  const auto result = detail::stage("mechanism", [&] {
    WorkerPool pool(config.threads);
    const mech::DatasetSource source(in.original.data, &pool);
    return a.mode == "oneshot" ? mech::one_shot(source, in.workloads, rho, config, a.delta, trace, a.conservative)
                               : mech::adaptive(source, in.workloads, rho, opts, config, a.delta, trace);
  });

  const std::string manifest_path = a.out + ".manifest.json";
  const std::string workloads_path = a.out + ".workloads.json";
  detail::stage("write output", [&] {
    const auto parent = std::filesystem::path(a.out).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    data::save_csv(result.synthetic, a.out, &in.original.params);
    io::save_workloads(in.workloads, *in.schema, workloads_path);
  });
  const auto errors = detail::file_errors(in, a.out, false);

  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : result.ledger.entries()) entries.push_back({{"label", e.label}, {"rho", e.rho}});
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : result.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"sample", e.sample},
                      {"workload", e.workload_id},
                      {"workload_name", in.workloads[e.workload_id].name},
                      {"query", e.query_index},
                      {"projection_loss", e.projection_loss}});
  }
  const double epsilon = dp::zcdp_to_dp(result.ledger.spent_rho(), a.delta);
  const nlohmann::json manifest = {
      {"inputs",
       {{"data", a.data},
        {"schema", a.schema},
        {"schema_digest", io::schema_digest(*in.schema)},
        {"queries", a.queries},
        {"workload_manifest", workloads_path},
        {"workload_digest", io::workloads_digest(in.workloads, *in.schema)},
        {"workloads", in.workloads.size()},
        {"queries_total", query::total_queries(in.workloads)},
        {"rows", in.original.data.rows()}}},
      {"mechanism",
       {{"mode", a.mode},
        {"epochs", a.epochs},
        {"samples", a.samples},
        {"selection", a.select},
        {"measurements", a.measurements},
        {"conservative_sensitivity", a.conservative}}},
      {"gsd", detail::gsd_json(config)},
      {"seed", a.seed},
      {"ledger",
       {{"total_rho", result.ledger.total_rho()}, {"spent_rho", result.ledger.spent_rho()}, {"entries", entries}}},
      {"privacy", {{"rho", result.ledger.spent_rho()}, {"epsilon", epsilon}, {"delta", a.delta}}},
      {"epochs", epochs},
      {"errors", {{"max_error", errors.max_error}, {"avg_error", errors.avg_error}}},
      {"outputs", {{"synthetic", a.out}, {"workloads", workloads_path}}}};
  detail::stage("write output", [&] { detail::write_text(manifest_path, manifest.dump(2) + "\n"); });

  out << "wrote " << a.out << " (" << result.synthetic.rows() << " rows)\n"
      << "ledger: " << result.ledger.entries().size() << " entries, rho spent " << detail::fmt(result.ledger.spent_rho())
      << " of " << detail::fmt(result.ledger.total_rho()) << "\n"
      << "privacy: (epsilon=" << detail::fmt(epsilon) << ", delta=" << detail::fmt(a.delta) << ")\n"
      << "max_error " << detail::fmt(errors.max_error) << "\n"
      << "avg_error " << detail::fmt(errors.avg_error) << "\n"
      << "manifest " << manifest_path << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string original, synthetic, schema, queries, workload_manifest;
  std::uint64_t seed = 0;
  bool per_workload = false;
};

inline int evaluate(const EvalArgs& a, std::ostream& out) {
  detail::require_file("synthetic", a.synthetic);
  const auto in = detail::load_inputs(a.original, a.schema, a.queries, a.workload_manifest, a.seed);
  const auto e = detail::file_errors(in, a.synthetic, a.per_workload);
  out << "max_error " << detail::fmt(e.max_error) << "\n"
      << "avg_error " << detail::fmt(e.avg_error) << "\n";
  if (a.per_workload) {
    out << "workload\tmax_error\tavg_error\n";
    for (const auto& w : e.per_workload) {
      out << w.name << '\t' << detail::fmt(w.max_error) << '\t' << detail::fmt(w.avg_error) << '\n';
    }
  }
  return kExitOk;
}

struct DemoArgs {
  std::size_t rows = 100;
  std::string temps;
  double lr = 1.0;
  std::size_t max_steps = 1000;
  std::uint64_t seed = 0;
  std::string trace;
};

inline std::vector<double> parse_temps(const std::string& text) {
  std::vector<double> temps;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !(v > 0.0)) throw UsageError("--temps: bad temperature '" + item + "'");
    temps.push_back(v);
  }
  if (temps.empty()) throw UsageError("--temps: empty list");
  if (!std::is_sorted(temps.begin(), temps.end())) throw UsageError("--temps: must be ascending");
  return temps;
}

inline int demo_sigmoid(const DemoArgs& a, std::ostream& out) {
  sigmoid::DemoOptions opts;
  opts.rows = a.rows;
  if (!a.temps.empty()) opts.anneal.temperatures = parse_temps(a.temps);
  if (!(a.lr >= 0.0)) throw UsageError("--lr must be non-negative");
  opts.anneal.learning_rate = a.lr;
  opts.anneal.max_steps = a.max_steps;
  opts.gsd.seed = a.seed;
  const auto r = detail::stage("demo", [&] { return sigmoid::run_demo(opts); });

  std::ofstream trace_file;
  std::ostream* trace = &out;
  if (!a.trace.empty()) {
    trace_file.open(a.trace, std::ios::binary | std::ios::trunc);
    if (!trace_file) throw StageError("open trace", "cannot write '" + a.trace + "'");
    trace = &trace_file;
  }
  *trace << "step\tsurrogate_loss\n";
  for (const auto& p : r.annealed.trace) *trace << p.step << '\t' << detail::fmt(p.surrogate_loss) << '\n';

  data::Dataset init(sigmoid::demo_schema(), a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) init.set(i, 0, 0.5);
  out << "annealed: surrogate_loss=" << detail::fmt(r.annealed.surrogate_loss)
      << " true_error=" << detail::fmt(r.annealed_true_error)
      << " unchanged_from_init=" << (r.annealed.data == init ? "true" : "false") << "\n"
      << "gsd: true_error=" << detail::fmt(r.gsd_true_error) << " generations=" << r.gsd_generations << "\n";
  return kExitOk;
}

// Entry point: `args` excludes the program name.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentially private synthetic data with a genetic projection optimizer", "gsdsynth"};
  app.require_subcommand(1);

  GenerateArgs gen;
  gen.gsd.threads = default_thread_count();
  auto* g = app.add_subcommand("generate", "Run a private mechanism and write synthetic data");
  g->add_option("--data", gen.data, "Sensitive CSV")->required();
  g->add_option("--schema", gen.schema, "Schema JSON")->required();
  g->add_option("--queries", gen.queries, "Query spec, e.g. cat-marginals:k=2");
  g->add_option("--workload-manifest", gen.workload_manifest, "Use workloads from a manifest instead");
  g->add_option("--out", gen.out, "Synthetic CSV path")->required();
  g->add_option("--mode", gen.mode, "oneshot or adaptive")->check(CLI::IsMember({"oneshot", "adaptive"}));
  g->add_option("--rho", gen.rho, "zCDP budget");
  g->add_option("--epsilon", gen.epsilon, "DP epsilon (converted to rho with --delta)");
  g->add_option("--delta", gen.delta, "DP delta")->check(CLI::Range(0.0, 1.0));
  g->add_option("-T,--T,--epochs", gen.epochs, "Adaptive epochs")->check(CLI::PositiveNumber);
  g->add_option("-S,--S,--samples", gen.samples, "Selections per epoch")->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "Master seed");
  g->add_option("--select", gen.select, "Selection unit")->check(CLI::IsMember({"workload", "query"}));
  g->add_option("--measurements", gen.measurements, "concat or replace")
      ->check(CLI::IsMember({"concat", "replace"}));
  g->add_option("--scheme", gen.scheme, "Candidate scheme")
      ->check(CLI::IsMember({"incumbent", "elite-row-cross-then-mutate"}));
  g->add_flag("--conservative-sensitivity", gen.conservative, "Use sqrt(m) for prefix and halfspace workloads");
  g->add_option("--trace", gen.trace, "Write per-generation JSON lines here");
  detail::add_gsd_options(*g, gen.gsd);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Compare a synthetic CSV against the original");
  e->add_option("--original", ev.original, "Original CSV")->required();
  e->add_option("--synthetic", ev.synthetic, "Synthetic CSV")->required();
  e->add_option("--schema", ev.schema, "Schema JSON")->required();
  e->add_option("--queries", ev.queries, "Query spec");
  e->add_option("--workload-manifest", ev.workload_manifest, "Workload manifest written by generate");
  e->add_option("--seed", ev.seed, "Seed for random query families");
  e->add_flag("--per-workload", ev.per_workload, "Print a per-workload table");

  DemoArgs dm;
  auto* d = app.add_subcommand("demo-sigmoid", "Sigmoid annealing versus the genetic optimizer on a 1-D prefix query");
  d->add_option("--n", dm.rows, "Rows")->check(CLI::Range(2, 1000000));
  d->add_option("--temps", dm.temps, "Comma-separated ascending inverse temperatures");
  d->add_option("--lr", dm.lr, "Learning rate");
  d->add_option("--max-steps", dm.max_steps, "Gradient steps per temperature");
  d->add_option("--seed", dm.seed, "Seed for the genetic optimizer");
  d->add_option("--trace", dm.trace, "Write the (step, surrogate loss) trace here instead of stdout");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (*g) return generate(gen, out);
    if (*e) return evaluate(ev, out);
    return demo_sigmoid(dm, out);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace gsdsynth::cli
