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

// Minimal library walkthrough: load the bundled sample, release 2-way
// marginals with the adaptive mechanism at rho = 0.5, and report the error.
//
//   quickstart [samples_dir]

#include <cstdio>
#include <string>

#include "gsdsynth/gsdsynth.hpp"

int main(int argc, char** argv) {
  using namespace gsdsynth;
  const std::string dir = argc > 1 ? argv[1] : "samples";
  try {
    const auto schema = data::load_schema(dir + "/adult_small.schema.json");
    const auto loaded = data::load_csv(dir + "/adult_small.csv", schema, /*normalize=*/true, nullptr);
    const data::Dataset& original = loaded.data;

    const auto workloads = query::gen_categorical_marginal_workloads(*schema, 2);

    gsd::GsdConfig config;
    config.synthetic_rows = 200;
    config.max_generations = 2000;
    config.seed = 42;

    mech::AdaptiveOptions options;
    options.epochs = 5;
    const auto result = mech::adaptive(mech::DatasetSource(original), workloads, 0.5, options, config);

    std::printf("rho spent     %.6g (eps %.4g at delta 1e-6)\n", result.ledger.spent_rho(),
                dp::zcdp_to_dp(result.ledger.spent_rho(), 1e-6));
    std::printf("max error     %.4f\n", eval::max_error(workloads, original, result.synthetic));
    std::printf("avg error     %.4f\n", eval::avg_error(workloads, original, result.synthetic));
    for (const auto& e : result.epochs) {
      std::printf("epoch %zu  measured %-28s projection loss %.3g\n", e.epoch, workloads[e.workload_id].name.c_str(),
                  e.projection_loss);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "quickstart: %s\n", e.what());
    return 1;
  }
  return 0;
}
