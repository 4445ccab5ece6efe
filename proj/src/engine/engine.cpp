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

#include "causard/engine/engine.hpp"

#include <algorithm>
#include <limits>

#include "causard/core/error.hpp"

namespace causard::engine {

void EngineConfig::validate() const {
  sampling.validate();
  if (min_visits < 1) throw DomainError("min visits must be at least 1");
  if (experiment_duration == 0) {
    throw DomainError("experiment duration must be positive");
  }
  if (selection_timeout_factor == 0) {
    throw DomainError("selection timeout factor must be positive");
  }
}

void RunTotals::merge(const RunTotals& other) {
  wall_time += other.wall_time;
  runtime += other.runtime;
  undistorted_time += other.undistorted_time;
  for (const auto& [k, v] : other.samples) samples[k] += v;
  for (const auto& [k, v] : other.undistorted_samples) {
    undistorted_samples[k] += v;
  }
  for (const auto& [k, v] : other.progress) progress[k] += v;
  for (const auto& [k, v] : other.latency) {
    auto& mine = latency[k];
    mine.begins += v.begins;
    mine.ends += v.ends;
    mine.inflight_ns += v.inflight_ns;
  }
  experiments += other.experiments;
  selection_timeouts += other.selection_timeouts;
}

__extension__ using Wide = unsigned __int128;

SpeedupPct select_speedup(Rng& rng) {
  // 40 equally likely outcomes: 20 map to 0%, one each to 5%..100%.
  // Multiply-shift keeps the mapping independent of the standard library.
  const auto r = static_cast<int>(
      (static_cast<Wide>(rng()) * 40) >> 64);
  return r < 20 ? SpeedupPct(0) : SpeedupPct((r - 19) * SpeedupPct::kStep);
}

TimeNs adapt_duration(std::uint64_t visits_delta, TimeNs current,
                      std::uint64_t min_visits) {
  if (visits_delta >= min_visits) return current;
  if (current > std::numeric_limits<TimeNs>::max() / 2) return current;
  return current * 2;
}

ExperimentEngine::ExperimentEngine(EngineConfig config, RuntimeHandles handles,
                                   RecordSink sink)
    : config_(std::move(config)),
      rt_(handles),
      sink_(std::move(sink)),
      rng_(config_.seed),
      duration_(config_.experiment_duration) {
  config_.validate();
  if (config_.fixed_line) fixed_line_ = rt_.locations.intern(*config_.fixed_line);
}

void ExperimentEngine::start(TimeNs now) {
  run_start_ = now;
  open_selection(now);
}

void ExperimentEngine::open_selection(TimeNs now) {
  phase_ = Phase::kSelecting;
  if (fixed_line_ != runtime::kNoLocation) {
    begin(fixed_line_, now);
    return;
  }
  deadline_ = now + duration_ * config_.selection_timeout_factor;
  rt_.global.open_selection();
}

TimeNs ExperimentEngine::step(TimeNs now) {
  switch (phase_) {
    case Phase::kIdle:
    case Phase::kFinished:
      return std::numeric_limits<TimeNs>::max();
    case Phase::kSelecting:
      if (auto line = rt_.global.claimed(); line != runtime::kNoLocation) {
        rt_.global.close_selection();
        begin(line, now);
      } else if (now >= deadline_) {
        ++timeouts_;
        open_selection(now);
      }
      break;
    case Phase::kRunning:
      if (now >= started_ + duration_) end(now);
      break;
    case Phase::kCooloff:
      if (now >= deadline_) open_selection(now);
      break;
  }
  switch (phase_) {
    case Phase::kRunning:
      return started_ + duration_;
    case Phase::kSelecting:
    case Phase::kCooloff:
      return deadline_;
    default:
      return std::numeric_limits<TimeNs>::max();
  }
}

void ExperimentEngine::begin(runtime::LocationId line, TimeNs now) {
  line_ = line;
  speedup_ = config_.fixed_speedup ? *config_.fixed_speedup
                                   : select_speedup(rng_);
  delay_ = runtime::compute_delay(speedup_, config_.sampling);
  start_counts_ = rt_.progress.snapshot(now).counts;
  started_ = now;
  rt_.global.begin_experiment(line, delay_, now);
  phase_ = Phase::kRunning;
}

void ExperimentEngine::end(TimeNs now) {
  const auto tally = rt_.global.end_experiment(now);
  const auto counts = rt_.progress.snapshot(now).counts;
  const auto points = rt_.progress.points();

  ExperimentRecord rec;
  rec.line = rt_.locations.location(line_);
  rec.speedup = speedup_;
  rec.delay_size = delay_;
  rec.wall_duration = now - started_;
  rec.delay_count = tally.delays;
  rec.inserted_delay_total =
      std::min<TimeNs>(tally.delays * delay_, rec.wall_duration);
  rec.effective_duration = rec.wall_duration - rec.inserted_delay_total;
  rec.selected_samples = tally.selected_samples;
  rec.observed_time = rec.wall_duration;

  std::uint64_t min_delta = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto before = i < start_counts_.size() ? start_counts_[i] : 0;
    const auto delta = counts[i] - before;
    rec.progress_deltas[points[i].name] = delta;
    min_delta = std::min(min_delta, delta);
  }

  inserted_total_ += rec.inserted_delay_total;
  if (delay_ > 0) distorted_time_ += rec.wall_duration;
  ++records_;
  if (sink_) sink_(rec);

  if (!points.empty()) {
    duration_ = adapt_duration(min_delta, duration_, config_.min_visits);
  }
  line_ = runtime::kNoLocation;
  phase_ = Phase::kCooloff;
  deadline_ = now + config_.cooloff;
}

RunTotals ExperimentEngine::finish(TimeNs now) {
  if (phase_ == Phase::kRunning) {
    const auto tally = rt_.global.end_experiment(now);
    const auto wall = now - started_;
    inserted_total_ += std::min<TimeNs>(tally.delays * delay_, wall);
    if (delay_ > 0) distorted_time_ += wall;
  }
  rt_.global.close_selection();
  phase_ = Phase::kFinished;

  RunTotals totals;
  totals.wall_time = now - run_start_;
  totals.runtime = totals.wall_time - std::min(inserted_total_, totals.wall_time);
  totals.undistorted_time =
      totals.wall_time - std::min(distorted_time_, totals.wall_time);
  const auto n = std::min(rt_.locations.size(), rt_.lines.capacity());
  for (runtime::LocationId id = 0; id < n; ++id) {
    if (const auto s = rt_.lines.total(id); s > 0) {
      const auto& loc = rt_.locations.location(id);
      totals.samples[loc] = s;
      totals.undistorted_samples[loc] = rt_.lines.undistorted(id);
    }
  }
  const auto snap = rt_.progress.snapshot(now);
  const auto points = rt_.progress.points();
  for (std::size_t i = 0; i < points.size(); ++i) {
    totals.progress[points[i].name] = snap.counts[i];
  }
  for (const auto& li : snap.latency) {
    totals.latency[li.key] = {li.begins, li.ends, li.inflight_ns};
  }
  totals.experiments = records_;
  totals.selection_timeouts = timeouts_;
  return totals;
}

}  // namespace causard::engine
