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
#include <deque>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causard/core/types.hpp"
#include "causard/runtime/locations.hpp"

namespace causard::runtime {

/// Time-integrated in-flight count for one latency begin/end pair.
struct LatencyIntegral {
  std::string key;
  std::uint64_t begins = 0;
  std::uint64_t ends = 0;
  /// Sum over time of (begins - ends), in item-nanoseconds.
  std::uint64_t inflight_ns = 0;
};

struct ProgressSnapshot {
  std::vector<std::uint64_t> counts;  // by point index
  std::vector<LatencyIntegral> latency;
};

/// Shared visit counters for every registered progress point. Visits are
/// single atomic increments; latency points also maintain the in-flight
/// integral needed for Little's Law under a per-pair lock.
class ProgressCounters {
 public:
  using Index = std::uint32_t;
  static constexpr std::size_t kCapacity = 256;

  ProgressCounters() = default;
  ProgressCounters(const ProgressCounters&) = delete;
  ProgressCounters& operator=(const ProgressCounters&) = delete;

  /// Idempotent by name. Throws if the name is reused with another kind.
  /// Sampled points need `table` to resolve their line.
  Index register_point(const ProgressPoint& point,
                       LocationTable* table = nullptr);

  std::optional<Index> find(std::string_view name) const;

  /// Throws Error for names that were never registered.
  Index index_of(std::string_view name) const;

  void visit(Index index, TimeNs now = 0);
  void visit(std::string_view name, TimeNs now = 0) {
    visit(index_of(name), now);
  }

  /// Counts one sample toward every sampled point whose line is on the stack.
  void on_sample(std::span<const LocationId> frames);

  std::uint64_t count(Index index) const {
    return counts_[index].load(std::memory_order_acquire);
  }

  ProgressSnapshot snapshot(TimeNs now) const;
  std::vector<ProgressPoint> points() const;
  std::size_t size() const { return size_.load(std::memory_order_acquire); }

 private:
  struct LatencyPair {
    std::string key;
    Index begin = UINT32_MAX;
    Index end = UINT32_MAX;
    std::mutex mu;
    std::int64_t inflight = 0;
    std::uint64_t integral = 0;
    TimeNs last = 0;
  };

  void latency_event(Index index, TimeNs now);

  mutable std::mutex mu_;
  std::vector<ProgressPoint> points_;
  std::array<std::atomic<std::uint64_t>, kCapacity> counts_{};
  std::array<std::atomic<LocationId>, kCapacity> sampled_line_{};
  std::array<std::int32_t, kCapacity> latency_slot_{};
  std::deque<LatencyPair> latency_;
  std::atomic<std::size_t> size_{0};
};

}  // namespace causard::runtime
