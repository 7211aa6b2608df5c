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

#include "gsdsynth/dataset.hpp"
#include "gsdsynth/dp_core.hpp"
#include "gsdsynth/errors.hpp"
#include "gsdsynth/evalkit.hpp"
#include "gsdsynth/evaluator.hpp"
#include "gsdsynth/gsd.hpp"
#include "gsdsynth/mechanisms.hpp"
#include "gsdsynth/parallel.hpp"
#include "gsdsynth/queries.hpp"
#include "gsdsynth/rng.hpp"
#include "gsdsynth/sigmoid_demo.hpp"
#include "gsdsynth/workload_io.hpp"
