/*
 * Copyright 2026 The Causard Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string>

#include "causard/analysis/profile.hpp"
#include "causard/engine/engine.hpp"
#include "causard/sim/simulator.hpp"
#include "causard/sim/workload.hpp"

namespace causard::sim {

/// A profiler prediction for one (line, speedup) next to the ground truth.
struct Prediction {
  SourceLocation line;
  SpeedupPct speedup;
  double predicted = 0;  // percent, from virtual speedup experiments
  double raw = 0;        // percent, before phase correction
  double oracle = 0;     // percent, from really speeding the line up
  std::uint64_t samples = 0;  // samples the line received while profiled
};

/// How experiments pick their line while predicting.
enum class LineChoice {
  kFixed,    // every experiment runs on the predicted line
  kSampled,  // lines are chosen from samples, as in a normal profile
};

/// Profiles at 0% and at `speedup` (one whole run each) and predicts the
/// program speedup of `line` from the merged records.
Prediction predict(const Workload& workload, const SourceLocation& line,
                   SpeedupPct speedup, const std::string& progress,
                   engine::EngineConfig config, const SimParams& params = {},
                   LineChoice choice = LineChoice::kFixed);

struct AccuracyResult {
  double predicted = 0;      // percent
  double observed = 0;       // percent
  double line_speedup = 0;   // percent of the delayed line's time removed
  TimeNs mean_line_time = 0;  // before the delay was added
  std::uint64_t samples = 0;
};

struct AccuracyOptions {
  engine::EngineConfig config;
  SimParams params;
  std::string progress;  // empty: the workload's first progress point
};

/// Adds `delay` after every run of `line`, profiles the slowed program and
/// reads its curve at the speedup that removes exactly the delay. Observed
/// is the real difference between the slowed and original programs.
AccuracyResult accuracy_protocol(const Workload& workload,
                                 const SourceLocation& line, TimeNs delay,
                                 const AccuracyOptions& options = {});

/// Curve-building options matching how the simulator profiles are read.
analysis::ProfileOptions profile_options(const Workload& workload,
                                         const std::string& progress);

}  // namespace causard::sim
