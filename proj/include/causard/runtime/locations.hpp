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

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>

#include "causard/core/types.hpp"

namespace causard::runtime {

using LocationId = std::uint32_t;
inline constexpr LocationId kNoLocation = UINT32_MAX;

/// Interns source locations into dense ids and caches their scope membership.
/// Interning takes a lock; id -> in-scope lookups are lock-free.
class LocationTable {
 public:
  static constexpr std::size_t kDefaultCapacity = 1 << 16;

  explicit LocationTable(Scope scope, std::size_t capacity = kDefaultCapacity);

  LocationId intern(const SourceLocation& loc);
  std::optional<LocationId> find(const SourceLocation& loc) const;

  /// The returned reference stays valid for the table's lifetime.
  const SourceLocation& location(LocationId id) const;

  bool in_scope(LocationId id) const {
    return id < capacity_ && in_scope_[id].load(std::memory_order_relaxed);
  }

  std::size_t size() const { return size_.load(std::memory_order_acquire); }
  std::size_t capacity() const { return capacity_; }
  const Scope& scope() const { return scope_; }

 private:
  Scope scope_;
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::deque<SourceLocation> locations_;
  std::unordered_map<SourceLocation, LocationId> ids_;
  std::unique_ptr<std::atomic<bool>[]> in_scope_;
  std::atomic<std::size_t> size_{0};
};

/// Innermost in-scope frame of a call stack ordered innermost first.
/// Everything executed out of scope is charged to the last in-scope callsite.
std::optional<SourceLocation> attribute_sample(
    std::span<const SourceLocation> frames, const Scope& scope);

LocationId attribute_sample(std::span<const LocationId> frames,
                            const LocationTable& table);

}  // namespace causard::runtime
