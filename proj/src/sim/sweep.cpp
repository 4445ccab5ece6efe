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


#include "causard/sim/sweep.hpp"

#include <exception>

namespace causard::sim {

namespace {

Prediction run(const PredictionJob& job) {
  return predict(*job.workload, job.line, job.speedup, job.progress,
                 job.config, job.params, job.choice);
}

}  // namespace

std::vector<PredictionJob> matrix_jobs(const Workload& workload,
                                       std::span<const int> percents,
                                       const engine::EngineConfig& config,
                                       const SimParams& params) {
  std::vector<PredictionJob> jobs;
  for (const auto& line : workload.lines()) {
    for (int pct : percents) {
      jobs.push_back({&workload, line, SpeedupPct(pct), {}, config, params,
                      LineChoice::kFixed});
    }
  }
  return jobs;
}

std::vector<Prediction> predict_serial(std::span<const PredictionJob> jobs) {
  std::vector<Prediction> out;
  out.reserve(jobs.size());
  for (const auto& job : jobs) out.push_back(run(job));
  return out;
}

std::vector<Prediction> predict_parallel(std::span<const PredictionJob> jobs) {
  std::vector<Prediction> out(jobs.size());
  // Exceptions may not cross the parallel region; keep the first one.
  std::exception_ptr failure;
  const auto n = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = run(jobs[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(causard_sweep_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace causard::sim
