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

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "causard/core/types.hpp"
#include "causard/runtime/locations.hpp"
#include "causard/runtime/progress.hpp"

namespace causard::runtime {

struct SamplingConfig {
  TimeNs period = kMillisecond;
  std::uint32_t batch_size = 10;

  /// Throws DomainError for a zero period or batch size.
  void validate() const;
};

/// Delay inserted per selected-line sample: round(speedup * period).
TimeNs compute_delay(SpeedupPct speedup, const SamplingConfig& config);

inline constexpr std::size_t kMaxFrames = 16;

/// One sampled call stack, innermost frame first.
struct Sample {
  std::uint32_t thread = 0;
  TimeNs timestamp = 0;
  std::uint8_t depth = 0;
  std::array<LocationId, kMaxFrames> frames{};

  std::span<const LocationId> stack() const { return {frames.data(), depth}; }

  /// Frames beyond kMaxFrames (the outermost ones) are dropped.
  static Sample of(std::uint32_t thread, TimeNs timestamp,
                   std::span<const LocationId> frames);
};

/// Shared pause bookkeeping. The global count is the number of delays every
/// thread owes since the profiler started; it only grows.
class GlobalDelayState {
 public:
  struct ExperimentTally {
    std::uint64_t delays = 0;            // global count increase
    std::uint64_t selected_samples = 0;  // s_obs
  };

  // --- profiler side ---
  void begin_experiment(LocationId line, TimeNs delay, TimeNs now);
  ExperimentTally end_experiment(TimeNs now);

  /// Opens the line-selection cell. The first in-scope sample claims it.
  void open_selection();
  void close_selection();
  /// The claimed line, or kNoLocation.
  LocationId claimed() const { return claim_.load(std::memory_order_acquire); }

  // --- program-thread side ---
  bool try_claim(LocationId line);
  bool selecting() const { return selecting_.load(std::memory_order_acquire); }

  LocationId selected() const {
    return selected_.load(std::memory_order_acquire);
  }
  TimeNs delay() const { return delay_.load(std::memory_order_acquire); }
  std::uint64_t count() const { return count_.load(std::memory_order_acquire); }
  /// Global count when the running experiment began. Debts older than this
  /// belong to an earlier experiment and are dropped.
  std::uint64_t base() const { return base_.load(std::memory_order_acquire); }
  TimeNs experiment_start() const {
    return start_.load(std::memory_order_acquire);
  }
  std::uint64_t epoch() const { return epoch_.load(std::memory_order_acquire); }

  /// Atomic max; returns the global count after the update.
  std::uint64_t raise_to(std::uint64_t value);
  void count_selected_sample() {
    selected_samples_.fetch_add(1, std::memory_order_relaxed);
  }

  /// True when a sample taken at `ts` fell inside an experiment that was
  /// inserting delays (the current one or the one before it).
  bool is_distorted(TimeNs ts) const;

 private:
  std::atomic<LocationId> selected_{kNoLocation};
  std::atomic<TimeNs> delay_{0};
  std::atomic<std::uint64_t> count_{0};
  std::atomic<std::uint64_t> base_{0};
  std::atomic<TimeNs> start_{0};
  std::atomic<std::uint64_t> epoch_{0};
  std::atomic<std::uint64_t> selected_samples_{0};

  std::atomic<bool> selecting_{false};
  std::atomic<LocationId> claim_{kNoLocation};

  std::atomic<TimeNs> prev_start_{0};
  std::atomic<TimeNs> prev_end_{0};
};

/// Per-location sample totals for the whole run.
class LineSampleCounters {
 public:
  explicit LineSampleCounters(std::size_t capacity);

  void add(LocationId id, bool distorted);
  std::uint64_t total(LocationId id) const {
    return total_[id].load(std::memory_order_relaxed);
  }
  /// Samples taken while no delays were being inserted.
  std::uint64_t undistorted(LocationId id) const {
    return undistorted_[id].load(std::memory_order_relaxed);
  }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> total_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> undistorted_;
};

/// Owned by exactly one program thread.
struct ThreadDelayState {
  std::uint32_t thread = 0;
  std::uint64_t local = 0;
  TimeNs excess_sleep = 0;

  std::uint64_t epoch = 0;
  std::uint64_t selected_samples = 0;  // in the current experiment
  std::vector<Sample> pending;

  // Where each unit of `local` came from. local == sum of these plus the
  // value inherited at creation.
  std::uint64_t inherited_units = 0;
  std::uint64_t paid_units = 0;      // pauses owed and executed
  std::uint64_t self_units = 0;      // own samples in the selected line
  std::uint64_t credited_units = 0;  // forgiven after being woken
  std::uint64_t skipped_units = 0;   // debts from finished experiments

  TimeNs total_obligation = 0;
  TimeNs total_slept = 0;
};

class Sleeper {
 public:
  virtual ~Sleeper() = default;
  /// Sleeps at least `requested` and returns the time actually slept.
  virtual TimeNs sleep(TimeNs requested) = 0;
};

/// nanosleep-backed sleeper that measures the time actually spent.
class RealSleeper final : public Sleeper {
 public:
  TimeNs sleep(TimeNs requested) override;
};

/// Everything sample processing reads or updates besides the thread's own
/// state. Only `locations` and `global` are required.
struct SamplingContext {
  const LocationTable& locations;
  GlobalDelayState& global;
  LineSampleCounters* lines = nullptr;
  ProgressCounters* progress = nullptr;
};

/// Processes one batch for the owning thread and returns the pause it owes.
/// Selected-line samples advance the local count (the thread paid by running
/// the line); afterwards the thread either raises the global count or owes
/// (global - local) delays.
TimeNs process_thread_samples(ThreadDelayState& thread, SamplingContext& ctx,
                              std::span<const Sample> batch);

/// Sleeps for the obligation minus any accumulated oversleep.
void execute_pause(ThreadDelayState& thread, TimeNs obligation,
                   Sleeper& sleeper);

/// State for a new thread: inherits the parent's local count.
ThreadDelayState on_thread_create(const ThreadDelayState& parent,
                                  std::uint32_t child);

/// Flushes pending samples and pays every outstanding delay. Call before
/// anything that may wake another thread, and before anything that may block.
void before_wake_op(ThreadDelayState& thread, SamplingContext& ctx,
                    Sleeper& sleeper);

/// Credits the thread with every delay issued up to now, without sleeping.
/// Call right after returning from an operation that may have suspended it.
void after_block_op(ThreadDelayState& thread, const GlobalDelayState& global);

}  // namespace causard::runtime
