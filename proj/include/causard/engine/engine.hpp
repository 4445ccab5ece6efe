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
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "causard/core/types.hpp"
#include "causard/runtime/delay.hpp"
#include "causard/runtime/progress.hpp"

namespace causard::engine {

struct EngineConfig {
  runtime::SamplingConfig sampling;
  std::uint64_t min_visits = 5;
  TimeNs experiment_duration = 500 * kMillisecond;
  TimeNs cooloff = 10 * kMillisecond;
  std::optional<SourceLocation> fixed_line;
  std::optional<SpeedupPct> fixed_speedup;
  std::uint64_t seed = 0;
  /// Line selection gives up after this many experiment durations and retries.
  std::uint32_t selection_timeout_factor = 10;

  void validate() const;
};

/// One performance experiment: what was sped up, for how long, and how many
/// progress visits happened.
struct ExperimentRecord {
  SourceLocation line;
  SpeedupPct speedup;
  TimeNs delay_size = 0;  // d
  TimeNs wall_duration = 0;
  std::uint64_t delay_count = 0;
  TimeNs inserted_delay_total = 0;
  TimeNs effective_duration = 0;
  std::map<std::string, std::uint64_t> progress_deltas;
  std::uint64_t selected_samples = 0;  // s_obs
  TimeNs observed_time = 0;            // t_obs

  friend bool operator==(const ExperimentRecord&,
                         const ExperimentRecord&) = default;
};

struct LatencyTotals {
  std::uint64_t begins = 0;
  std::uint64_t ends = 0;
  std::uint64_t inflight_ns = 0;
  friend bool operator==(const LatencyTotals&, const LatencyTotals&) = default;
};

/// Whole-run aggregates, inside and outside experiments.
struct RunTotals {
  TimeNs wall_time = 0;
  TimeNs runtime = 0;  // T: wall time minus every inserted delay
  std::map<SourceLocation, std::uint64_t> samples;  // s per line
  /// Time and per-line samples while no delays were being inserted.
  TimeNs undistorted_time = 0;
  std::map<SourceLocation, std::uint64_t> undistorted_samples;
  std::map<std::string, std::uint64_t> progress;  // N per point
  std::map<std::string, LatencyTotals> latency;
  std::uint64_t experiments = 0;
  std::uint64_t selection_timeouts = 0;

  /// Adds another run's totals (for combining profiles of separate runs).
  void merge(const RunTotals& other);

  friend bool operator==(const RunTotals&, const RunTotals&) = default;
};

/// Seeded generator for every random choice the engine makes.
using Rng = std::mt19937_64;

/// Zero with probability 1/2; otherwise uniform over 5%, 10%, ..., 100%.
SpeedupPct select_speedup(Rng& rng);

/// Doubles the experiment length when the experiment saw too few visits.
TimeNs adapt_duration(std::uint64_t visits_delta, TimeNs current,
                      std::uint64_t min_visits);

/// Handles to the runtime state the engine coordinates.
struct RuntimeHandles {
  runtime::LocationTable& locations;
  runtime::GlobalDelayState& global;
  runtime::ProgressCounters& progress;
  runtime::LineSampleCounters& lines;
};

/// The profiler's experiment loop as a state machine over a caller-supplied
/// clock: select line, select speedup, run, emit record, cool off, repeat.
/// The live backend drives it from a dedicated thread; the simulator drives
/// it from its event loop.
class ExperimentEngine {
 public:
  using RecordSink = std::function<void(const ExperimentRecord&)>;

  enum class Phase { kIdle, kSelecting, kRunning, kCooloff, kFinished };

  ExperimentEngine(EngineConfig config, RuntimeHandles handles,
                   RecordSink sink);

  void start(TimeNs now);

  /// Advances the state machine and returns the next time it needs to run.
  /// While selecting, call again as soon as a line has been claimed.
  TimeNs step(TimeNs now);

  /// Program exit: a running experiment is dropped, totals are returned.
  RunTotals finish(TimeNs now);

  Phase phase() const { return phase_; }
  TimeNs experiment_duration() const { return duration_; }
  std::uint64_t records_emitted() const { return records_; }
  const EngineConfig& config() const { return config_; }

 private:
  void open_selection(TimeNs now);
  void begin(runtime::LocationId line, TimeNs now);
  void end(TimeNs now);

  EngineConfig config_;
  RuntimeHandles rt_;
  RecordSink sink_;
  Rng rng_;

  Phase phase_ = Phase::kIdle;
  TimeNs duration_;
  TimeNs run_start_ = 0;
  TimeNs deadline_ = 0;
  runtime::LocationId fixed_line_ = runtime::kNoLocation;

  // Running experiment.
  runtime::LocationId line_ = runtime::kNoLocation;
  SpeedupPct speedup_;
  TimeNs delay_ = 0;
  TimeNs started_ = 0;
  std::vector<std::uint64_t> start_counts_;

  TimeNs inserted_total_ = 0;
  TimeNs distorted_time_ = 0;
  std::uint64_t records_ = 0;
  std::uint64_t timeouts_ = 0;
};

}  // namespace causard::engine
