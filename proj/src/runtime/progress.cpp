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

#include "causard/runtime/progress.hpp"

#include "causard/core/error.hpp"

namespace causard::runtime {

ProgressCounters::Index ProgressCounters::register_point(
    const ProgressPoint& point, LocationTable* table) {
  std::lock_guard lock(mu_);
  for (Index i = 0; i < points_.size(); ++i) {
    if (points_[i].name == point.name) {
      if (points_[i].kind != point.kind) {
        throw Error("progress point '" + point.name +
                    "' re-registered with a different kind");
      }
      return i;
    }
  }
  if (points_.size() >= kCapacity) throw Error("too many progress points");
  const auto index = static_cast<Index>(points_.size());
  sampled_line_[index].store(kNoLocation, std::memory_order_relaxed);
  latency_slot_[index] = -1;
  if (point.kind == ProgressKind::kSampled) {
    if (!table || !point.sampled_line) {
      throw Error("sampled progress point '" + point.name +
                  "' needs a line and a location table");
    }
    sampled_line_[index].store(table->intern(*point.sampled_line),
                               std::memory_order_relaxed);
  }
  if (point.kind == ProgressKind::kLatencyBegin ||
      point.kind == ProgressKind::kLatencyEnd) {
    std::size_t slot = 0;
    while (slot < latency_.size() && latency_[slot].key != point.latency_key) {
      ++slot;
    }
    if (slot == latency_.size()) latency_.emplace_back().key = point.latency_key;
    auto& pair = latency_[slot];
    (point.kind == ProgressKind::kLatencyBegin ? pair.begin : pair.end) = index;
    latency_slot_[index] = static_cast<std::int32_t>(slot);
  }
  points_.push_back(point);
  size_.store(points_.size(), std::memory_order_release);
  return index;
}

std::optional<ProgressCounters::Index> ProgressCounters::find(
    std::string_view name) const {
  std::lock_guard lock(mu_);
  for (Index i = 0; i < points_.size(); ++i) {
    if (points_[i].name == name) return i;
  }
  return std::nullopt;
}

ProgressCounters::Index ProgressCounters::index_of(
    std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error("unregistered progress point '" + std::string(name) + "'");
}

void ProgressCounters::visit(Index index, TimeNs now) {
  if (index >= size()) {
    throw Error("unregistered progress point index " + std::to_string(index));
  }
  const auto slot = latency_slot_[index];
  if (slot >= 0) {
    latency_event(index, now);
  } else {
    counts_[index].fetch_add(1, std::memory_order_acq_rel);
  }
}

void ProgressCounters::latency_event(Index index, TimeNs now) {
  auto& pair = latency_[static_cast<std::size_t>(latency_slot_[index])];
  std::lock_guard lock(pair.mu);
  if (now > pair.last && pair.inflight > 0) {
    pair.integral += static_cast<std::uint64_t>(pair.inflight) * (now - pair.last);
  }
  if (now > pair.last) pair.last = now;
  pair.inflight += index == pair.begin ? 1 : -1;
  counts_[index].fetch_add(1, std::memory_order_acq_rel);
}

void ProgressCounters::on_sample(std::span<const LocationId> frames) {
  const auto n = size();
  for (Index i = 0; i < n; ++i) {
    const auto line = sampled_line_[i].load(std::memory_order_relaxed);
    if (line == kNoLocation) continue;
    for (auto f : frames) {
      if (f == line) {
        counts_[i].fetch_add(1, std::memory_order_acq_rel);
        break;
      }
    }
  }
}

ProgressSnapshot ProgressCounters::snapshot(TimeNs now) const {
  ProgressSnapshot snap;
  const auto n = size();
  snap.counts.reserve(n);
  for (Index i = 0; i < n; ++i) snap.counts.push_back(count(i));
  std::lock_guard lock(mu_);
  for (auto& pair : latency_) {
    std::lock_guard pair_lock(const_cast<LatencyPair&>(pair).mu);
    LatencyIntegral li;
    li.key = pair.key;
    if (pair.begin != UINT32_MAX) li.begins = count(pair.begin);
    if (pair.end != UINT32_MAX) li.ends = count(pair.end);
    li.inflight_ns = pair.integral;
    if (now > pair.last && pair.inflight > 0) {
      li.inflight_ns += static_cast<std::uint64_t>(pair.inflight) * (now - pair.last);
    }
    snap.latency.push_back(std::move(li));
  }
  return snap;
}

std::vector<ProgressPoint> ProgressCounters::points() const {
  std::lock_guard lock(mu_);
  return points_;
}

}  // namespace causard::runtime
