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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "causard/core/types.hpp"
#include "causard/engine/engine.hpp"
#include "causard/runtime/delay.hpp"
#include "causard/sim/workload.hpp"

namespace causard::sim {

enum class Mode {
  kBaseline,  // durations as written
  kActual,    // Compute on `line` really shortened by `speedup`
  kVirtual,   // durations as written; other threads paused instead
};

struct SimParams {
  Mode mode = Mode::kBaseline;
  std::optional<SourceLocation> line;
  SpeedupPct speedup;
  runtime::SamplingConfig sampling;
  /// Every completed run of the selected line counts as one sample and the
  /// delay is one line-speedup's worth of that run. Removes sampling error.
  bool per_visit = false;
  /// Sample intervals vary uniformly within +-jitter and each thread starts
  /// at a random phase. Zero keeps sampling strictly periodic.
  TimeNs jitter = 0;
  Scope scope = Scope::everything();
  std::uint64_t seed = 0;
  /// Simulated-time budget; exceeding it is an error.
  TimeNs time_limit = 100'000 * kSecond;
};

struct LineStats {
  std::uint64_t executions = 0;
  TimeNs total_time = 0;
  std::uint64_t samples = 0;
  TimeNs mean_time() const {
    return executions == 0 ? 0 : total_time / executions;
  }
  friend bool operator==(const LineStats&, const LineStats&) = default;
};

struct ThreadStats {
  std::string name;
  TimeNs busy = 0;    // time spent computing
  TimeNs paused = 0;  // time spent in inserted pauses
  std::uint64_t runs = 0;
  std::uint64_t local = 0;
  std::uint64_t inherited_units = 0;
  std::uint64_t paid_units = 0;
  std::uint64_t self_units = 0;
  std::uint64_t credited_units = 0;
  std::uint64_t skipped_units = 0;
  friend bool operator==(const ThreadStats&, const ThreadStats&) = default;
};

/// Per-item latency measured by matching each end to the oldest open begin.
struct DirectLatency {
  std::uint64_t items = 0;
  TimeNs total = 0;
  double mean() const {
    return items == 0 ? 0.0 : static_cast<double>(total) / items;
  }
  friend bool operator==(const DirectLatency&, const DirectLatency&) = default;
};

struct SimResult {
  TimeNs wall = 0;
  TimeNs inserted_delay = 0;  // global delay count times the delay size
  std::uint64_t delay_count = 0;
  TimeNs delay_size = 0;
  std::map<std::string, std::uint64_t> progress;
  std::map<SourceLocation, LineStats> lines;
  std::map<SourceLocation, std::uint64_t> delay_trips;
  std::map<std::string, engine::LatencyTotals> latency;
  std::map<std::string, DirectLatency> direct_latency;
  std::vector<ThreadStats> threads;
  /// Filled when the experiment engine drives the run.
  std::vector<engine::ExperimentRecord> records;
  std::optional<engine::RunTotals> totals;

  TimeNs effective_time() const { return wall - inserted_delay; }

  friend bool operator==(const SimResult&, const SimResult&) = default;
};

/// Runs one workload to completion of its entry thread. Throws DeadlockError
/// when nothing can run and the entry thread has not finished.
SimResult simulate(const Workload& workload, const SimParams& params);

/// Runs the workload under the full experiment engine. Sampling settings come
/// from `config`; mode, line and speedup in `params` are ignored.
SimResult profile_simulated(const Workload& workload,
                            const engine::EngineConfig& config,
                            const SimParams& params = {});

/// Percent program speedup from really speeding `line` up by `speedup`,
/// measured by the visit period of `progress`.
double oracle_speedup(const Workload& workload, const SourceLocation& line,
                      SpeedupPct speedup, const std::string& progress);

/// How much `speedup` shortens a run of `duration` (rounded half up).
TimeNs shortened_by(TimeNs duration, SpeedupPct speedup);

}  // namespace causard::sim
