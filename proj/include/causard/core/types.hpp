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

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace causard {

/// Nanoseconds. Every duration and timestamp in the toolkit uses this unit.
using TimeNs = std::uint64_t;

inline constexpr TimeNs kMicrosecond = 1'000;
inline constexpr TimeNs kMillisecond = 1'000'000;
inline constexpr TimeNs kSecond = 1'000'000'000;

/// Parses "<integer><unit>" with unit one of ns, us, ms, s.
TimeNs parse_duration(std::string_view text);

/// Shortest exact rendering using the largest unit that divides the value.
std::string format_duration(TimeNs value);

/// A line speedup expressed as an integer percentage in {0, 5, ..., 100}.
class SpeedupPct {
 public:
  constexpr SpeedupPct() = default;

  /// Throws DomainError unless value is a multiple of 5 in [0, 100].
  explicit SpeedupPct(int value);

  constexpr int value() const { return value_; }
  constexpr double fraction() const { return value_ / 100.0; }

  static constexpr int kStep = 5;
  static constexpr int kMax = 100;

  friend constexpr auto operator<=>(SpeedupPct, SpeedupPct) = default;

 private:
  int value_ = 0;
};

/// A profilable source line.
struct SourceLocation {
  std::string file;
  std::uint32_t line = 0;

  /// Canonical "file:line".
  std::string str() const;

  friend auto operator<=>(const SourceLocation&, const SourceLocation&) =
      default;
};

/// Parses "<file>:<line>". The last colon separates file from line.
SourceLocation parse_location(std::string_view text);

/// Glob-based filter over source file paths. `*` stays within one path
/// segment and `**` crosses segments. An empty pattern list matches nothing.
class Scope {
 public:
  Scope() = default;
  explicit Scope(std::vector<std::string> patterns)
      : patterns_(std::move(patterns)) {}

  /// The scope used when the caller gives none: every file.
  static Scope everything() { return Scope({"**"}); }

  const std::vector<std::string>& patterns() const { return patterns_; }
  bool matches_file(std::string_view file) const;

 private:
  std::vector<std::string> patterns_;
};

bool glob_match(std::string_view pattern, std::string_view path);

bool in_scope(const SourceLocation& loc, const Scope& scope);

enum class ProgressKind { kSource, kSampled, kLatencyBegin, kLatencyEnd };

std::string_view to_string(ProgressKind kind);

/// A named progress point. Latency points carry the key that pairs a begin
/// point with its end point.
struct ProgressPoint {
  std::string name;
  ProgressKind kind = ProgressKind::kSource;
  std::string latency_key;
  /// For sampled points: the line whose samples are counted.
  std::optional<SourceLocation> sampled_line;

  static ProgressPoint source(std::string name) {
    return {std::move(name), ProgressKind::kSource, {}, {}};
  }
  static ProgressPoint latency_begin(const std::string& key) {
    return {key + ".begin", ProgressKind::kLatencyBegin, key, {}};
  }
  static ProgressPoint latency_end(const std::string& key) {
    return {key + ".end", ProgressKind::kLatencyEnd, key, {}};
  }
  static ProgressPoint sampled(std::string name, SourceLocation line) {
    return {std::move(name), ProgressKind::kSampled, {}, std::move(line)};
  }
};

/// Throws ParseError unless every latency end has exactly one begin with the
/// same key (and vice versa) and names are unique.
void validate_progress_points(const std::vector<ProgressPoint>& points);

}  // namespace causard

template <>
struct std::hash<causard::SourceLocation> {
  std::size_t operator()(const causard::SourceLocation& loc) const noexcept {
    return std::hash<std::string>{}(loc.file) * 31u + loc.line;
  }
};
