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
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "causard/core/types.hpp"

namespace causard::sim {

struct Segment;

/// Runs for `duration` with `stack` (innermost first) as the call stack.
struct Compute {
  std::vector<SourceLocation> stack;
  TimeNs duration = 0;
  const SourceLocation& line() const { return stack.front(); }
};
/// Extra time charged to `line`, as a delay macro placed in that line would.
struct InsertedDelay {
  SourceLocation line;
  TimeNs duration = 0;
};
struct Lock { std::uint32_t mutex = 0; };
struct Unlock { std::uint32_t mutex = 0; };
struct BarrierWait { std::uint32_t barrier = 0; };
struct CondWait { std::uint32_t cv = 0, mutex = 0; };
struct CondSignal { std::uint32_t cv = 0; };
struct CondBroadcast { std::uint32_t cv = 0; };
struct Spawn { std::uint32_t thread = 0; };
struct Join { std::uint32_t thread = 0; };
struct Progress { std::uint32_t point = 0; };
struct LatencyBegin { std::uint32_t point = 0; };
struct LatencyEnd { std::uint32_t point = 0; };
struct Add {
  std::uint32_t counter = 0;
  std::int64_t delta = 0;
};
enum class Cmp { kLt, kLe, kGt, kGe, kEq, kNe };
bool compare(std::int64_t lhs, Cmp cmp, std::int64_t rhs);
/// `while (!(counter cmp value)) cond_wait(cv, mutex);`
struct WaitFor {
  std::uint32_t cv = 0, mutex = 0, counter = 0;
  Cmp cmp = Cmp::kGt;
  std::int64_t value = 0;
};
/// Non-blocking arrival at a barrier, for hand-rolled spinning barriers.
struct Arrive { std::uint32_t barrier = 0; };
struct Repeat {
  std::uint64_t count = 0;
  std::vector<Segment> body;
};
/// Repeats `body` until the barrier opens past this thread's last arrival.
struct Spin {
  std::uint32_t barrier = 0;
  std::vector<Segment> body;
};

struct Segment {
  std::variant<Compute, InsertedDelay, Lock, Unlock, BarrierWait, CondWait,
               CondSignal, CondBroadcast, Spawn, Join, Progress, LatencyBegin,
               LatencyEnd, Add, WaitFor, Arrive, Repeat, Spin>
      op;
  std::uint32_t source_line = 0;  // line in the workload text
};

struct ThreadSpec {
  std::string name;
  std::vector<Segment> body;
};

struct BarrierSpec {
  std::string name;
  std::uint32_t parties = 1;
};

struct CounterSpec {
  std::string name;
  std::int64_t initial = 0;
};

/// A multithreaded program as timed line executions and synchronization.
struct Workload {
  std::vector<ThreadSpec> threads;
  std::vector<std::string> mutexes;
  std::vector<BarrierSpec> barriers;
  std::vector<std::string> condvars;
  std::vector<CounterSpec> counters;
  std::vector<ProgressPoint> progress;
  std::uint32_t entry = 0;

  std::optional<std::uint32_t> thread_index(std::string_view name) const;
  std::optional<std::uint32_t> progress_index(std::string_view name) const;

  /// Every distinct Compute line, in first-appearance order.
  std::vector<SourceLocation> lines() const;
  bool has_line(const SourceLocation& line) const;

  /// Checks every structural rule; throws LoadError naming the offence.
  void validate() const;
};

/// Parses the line-oriented workload format. Throws LoadError with
/// "<origin>:<line>: " prefixed to the message.
Workload load_workload(std::string_view text,
                       std::string_view origin = "workload");

Workload load_workload_file(const std::string& path);

/// Returns a copy with `InsertedDelay(line, delay)` after every Compute on
/// `line`.
Workload with_inserted_delay(const Workload& workload,
                             const SourceLocation& line, TimeNs delay);

}  // namespace causard::sim
