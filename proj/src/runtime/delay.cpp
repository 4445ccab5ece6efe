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

#include "causard/runtime/delay.hpp"

#include <time.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "causard/core/error.hpp"

namespace causard::runtime {

void SamplingConfig::validate() const {
  if (period == 0) throw DomainError("sampling period must be positive");
  if (batch_size == 0) throw DomainError("batch size must be at least 1");
}

TimeNs compute_delay(SpeedupPct speedup, const SamplingConfig& config) {
  // Integer round-half-up of value * period / 100, split to avoid overflow.
  const TimeNs v = static_cast<TimeNs>(speedup.value());
  return config.period / 100 * v + (config.period % 100 * v + 50) / 100;
}

Sample Sample::of(std::uint32_t thread, TimeNs timestamp,
                  std::span<const LocationId> frames) {
  Sample s;
  s.thread = thread;
  s.timestamp = timestamp;
  s.depth = static_cast<std::uint8_t>(std::min(frames.size(), kMaxFrames));
  std::copy_n(frames.begin(), s.depth, s.frames.begin());
  return s;
}

void GlobalDelayState::begin_experiment(LocationId line, TimeNs delay,
                                        TimeNs now) {
  base_.store(count_.load(std::memory_order_acquire), std::memory_order_release);
  start_.store(now, std::memory_order_release);
  delay_.store(delay, std::memory_order_release);
  selected_samples_.store(0, std::memory_order_release);
  epoch_.fetch_add(1, std::memory_order_acq_rel);
  selected_.store(line, std::memory_order_release);
}

GlobalDelayState::ExperimentTally GlobalDelayState::end_experiment(TimeNs now) {
  selected_.store(kNoLocation, std::memory_order_release);
  ExperimentTally tally;
  tally.delays = count_.load(std::memory_order_acquire) - base();
  tally.selected_samples = selected_samples_.load(std::memory_order_acquire);
  if (delay() > 0) {
    prev_start_.store(experiment_start(), std::memory_order_release);
    prev_end_.store(now, std::memory_order_release);
  }
  delay_.store(0, std::memory_order_release);
  return tally;
}

void GlobalDelayState::open_selection() {
  claim_.store(kNoLocation, std::memory_order_release);
  selecting_.store(true, std::memory_order_release);
}

void GlobalDelayState::close_selection() {
  selecting_.store(false, std::memory_order_release);
}

bool GlobalDelayState::try_claim(LocationId line) {
  if (!selecting()) return false;
  auto expected = kNoLocation;
  return claim_.compare_exchange_strong(expected, line,
                                        std::memory_order_acq_rel);
}

std::uint64_t GlobalDelayState::raise_to(std::uint64_t value) {
  auto current = count_.load(std::memory_order_acquire);
  while (current < value &&
         !count_.compare_exchange_weak(current, value,
                                       std::memory_order_acq_rel)) {
  }
  return std::max(current, value);
}

bool GlobalDelayState::is_distorted(TimeNs ts) const {
  if (selected() != kNoLocation && delay() > 0 && ts >= experiment_start()) {
    return true;
  }
  return ts >= prev_start_.load(std::memory_order_acquire) &&
         ts < prev_end_.load(std::memory_order_acquire);
}

LineSampleCounters::LineSampleCounters(std::size_t capacity)
    : capacity_(capacity),
      total_(new std::atomic<std::uint64_t>[capacity]),
      undistorted_(new std::atomic<std::uint64_t>[capacity]) {
  for (std::size_t i = 0; i < capacity; ++i) {
    total_[i] = 0;
    undistorted_[i] = 0;
  }
}

void LineSampleCounters::add(LocationId id, bool distorted) {
  if (id >= capacity_) return;
  total_[id].fetch_add(1, std::memory_order_relaxed);
  if (!distorted) undistorted_[id].fetch_add(1, std::memory_order_relaxed);
}

TimeNs RealSleeper::sleep(TimeNs requested) {
  const auto start = std::chrono::steady_clock::now();
  timespec ts{static_cast<time_t>(requested / kSecond),
              static_cast<long>(requested % kSecond)};
  while (nanosleep(&ts, &ts) != 0) {
  }
  const auto slept = std::chrono::duration_cast<std::chrono::nanoseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return static_cast<TimeNs>(std::max<std::int64_t>(slept, 0));
}

TimeNs process_thread_samples(ThreadDelayState& thread, SamplingContext& ctx,
                              std::span<const Sample> batch) {
  auto& global = ctx.global;
  const auto selected = global.selected();
  const auto start = global.experiment_start();
  const auto epoch = global.epoch();
  if (thread.epoch != epoch) {
    thread.epoch = epoch;
    thread.selected_samples = 0;
  }

  for (const auto& sample : batch) {
    const auto line = attribute_sample(sample.stack(), ctx.locations);
    if (ctx.progress) ctx.progress->on_sample(sample.stack());
    if (line == kNoLocation) continue;
    if (ctx.lines) ctx.lines->add(line, global.is_distorted(sample.timestamp));
    if (selected == kNoLocation) {
      global.try_claim(line);
    } else if (line == selected && sample.timestamp >= start) {
      ++thread.local;
      ++thread.self_units;
      ++thread.selected_samples;
      global.count_selected_sample();
    }
  }

  if (selected == kNoLocation) return 0;

  if (const auto base = global.base(); thread.local < base) {
    thread.skipped_units += base - thread.local;
    thread.local = base;
  }
  auto current = global.count();
  if (thread.local > current) current = global.raise_to(thread.local);
  if (thread.local >= current) return 0;

  const auto owed = current - thread.local;
  thread.paid_units += owed;
  thread.local = current;
  return owed * global.delay();
}

void execute_pause(ThreadDelayState& thread, TimeNs obligation,
                   Sleeper& sleeper) {
  if (obligation == 0) return;
  thread.total_obligation += obligation;
  if (thread.excess_sleep >= obligation) {
    thread.excess_sleep -= obligation;
    return;
  }
  const auto requested = obligation - thread.excess_sleep;
  const auto actual = sleeper.sleep(requested);
  thread.total_slept += actual;
  // actual < requested only if the sleeper undersleeps; nothing carries over.
  thread.excess_sleep = actual >= requested ? actual - requested : 0;
}

ThreadDelayState on_thread_create(const ThreadDelayState& parent,
                                  std::uint32_t child) {
  ThreadDelayState state;
  state.thread = child;
  state.local = parent.local;
  state.inherited_units = parent.local;
  state.epoch = parent.epoch;
  return state;
}

void before_wake_op(ThreadDelayState& thread, SamplingContext& ctx,
                    Sleeper& sleeper) {
  auto obligation = process_thread_samples(thread, ctx, thread.pending);
  thread.pending.clear();
  // Delays issued while this thread slept must be paid too. A handful of
  // rounds is enough; anything left is settled at the next safe point.
  for (int round = 0; obligation > 0 && round < 4; ++round) {
    execute_pause(thread, obligation, sleeper);
    obligation = process_thread_samples(thread, ctx, {});
  }
  execute_pause(thread, obligation, sleeper);
}

void after_block_op(ThreadDelayState& thread, const GlobalDelayState& global) {
  const auto current = global.count();
  if (thread.local < current) {
    thread.credited_units += current - thread.local;
    thread.local = current;
  }
}

}  // namespace causard::runtime
