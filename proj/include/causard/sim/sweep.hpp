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

#include <span>
#include <string>
#include <vector>

#include "causard/sim/protocols.hpp"

namespace causard::sim {

/// One independent prediction: a line and speedup to check on a workload.
struct PredictionJob {
  const Workload* workload = nullptr;
  SourceLocation line;
  SpeedupPct speedup;
  std::string progress;
  engine::EngineConfig config;
  SimParams params;
  LineChoice choice = LineChoice::kFixed;
};

/// Every line of `workload` at every speedup in `percents`.
std::vector<PredictionJob> matrix_jobs(const Workload& workload,
                                       std::span<const int> percents,
                                       const engine::EngineConfig& config,
                                       const SimParams& params);

/// Runs the jobs one after another. The reference result.
std::vector<Prediction> predict_serial(std::span<const PredictionJob> jobs);

/// Runs the jobs across OpenMP threads. Each job is seeded and owns its
/// simulator, so the output equals predict_serial bit for bit.
std::vector<Prediction> predict_parallel(std::span<const PredictionJob> jobs);

}  // namespace causard::sim
