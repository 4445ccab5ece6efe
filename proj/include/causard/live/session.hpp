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
#include <vector>

#include "causard/core/types.hpp"
#include "causard/engine/engine.hpp"

namespace causard::live {

enum class Mode {
  kOff,      // wrappers pass straight through
  kSample,   // sampler and batch processing, no experiments
  kProfile,  // full causal profiling
};

struct SessionOptions {
  Mode mode = Mode::kOff;
  std::string out = "profile.causard";
  engine::EngineConfig config;
  Scope scope = Scope::everything();
  /// Progress points registered up front so they show up even if unvisited.
  std::vector<std::string> progress;
};

/// Reads CAUSARD_MODE, CAUSARD_OUT, CAUSARD_SEED, CAUSARD_PERIOD,
/// CAUSARD_BATCH, CAUSARD_EXPERIMENT, CAUSARD_COOLOFF, CAUSARD_MIN_VISITS,
/// CAUSARD_SCOPE, CAUSARD_PROGRESS, CAUSARD_FIXED_LINE and
/// CAUSARD_FIXED_SPEEDUP. Unset or empty variables keep their defaults.
/// Throws UsageError or DomainError on malformed values.
SessionOptions options_from_env();

/// Per-thread pause accounting, captured when a thread leaves the session.
struct ThreadReport {
  std::uint32_t thread = 0;
  std::uint64_t samples = 0;
  TimeNs total_obligation = 0;
  TimeNs total_slept = 0;
  TimeNs excess_sleep = 0;
};

/// Starts a session explicitly. Without this call the first instrumentation
/// call starts one from the environment. Throws if a session is running.
void start(const SessionOptions& options);

/// Stops the sampler and the engine, writes the profile (unless off) and
/// returns the run totals. A no-op when no session is running. Also runs at
/// process exit.
engine::RunTotals shutdown();

Mode mode();

/// Registers the calling thread's final accounting. Threads started through
/// live::Thread do this on exit; call it from other threads before they end.
void retire_thread();

/// Reports of every retired thread in the current (or last) session.
std::vector<ThreadReport> thread_reports();

}  // namespace causard::live
