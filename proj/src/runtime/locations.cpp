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

#include "causard/runtime/locations.hpp"

#include "causard/core/error.hpp"

namespace causard::runtime {

LocationTable::LocationTable(Scope scope, std::size_t capacity)
    : scope_(std::move(scope)),
      capacity_(capacity),
      in_scope_(new std::atomic<bool>[capacity]) {
  for (std::size_t i = 0; i < capacity_; ++i) in_scope_[i] = false;
}

LocationId LocationTable::intern(const SourceLocation& loc) {
  std::lock_guard lock(mu_);
  if (auto it = ids_.find(loc); it != ids_.end()) return it->second;
  if (locations_.size() >= capacity_) {
    throw Error("location table full (" + std::to_string(capacity_) +
                " entries)");
  }
  const auto id = static_cast<LocationId>(locations_.size());
  locations_.push_back(loc);
  ids_.emplace(loc, id);
  in_scope_[id].store(causard::in_scope(loc, scope_),
                      std::memory_order_relaxed);
  size_.store(locations_.size(), std::memory_order_release);
  return id;
}

std::optional<LocationId> LocationTable::find(const SourceLocation& loc) const {
  std::lock_guard lock(mu_);
  if (auto it = ids_.find(loc); it != ids_.end()) return it->second;
  return std::nullopt;
}

const SourceLocation& LocationTable::location(LocationId id) const {
  std::lock_guard lock(mu_);
  if (id >= locations_.size()) {
    throw Error("unknown location id " + std::to_string(id));
  }
  return locations_[id];
}

std::optional<SourceLocation> attribute_sample(
    std::span<const SourceLocation> frames, const Scope& scope) {
  for (const auto& f : frames) {
    if (in_scope(f, scope)) return f;
  }
  return std::nullopt;
}

LocationId attribute_sample(std::span<const LocationId> frames,
                            const LocationTable& table) {
  for (auto id : frames) {
    if (table.in_scope(id)) return id;
  }
  return kNoLocation;
}

}  // namespace causard::runtime
