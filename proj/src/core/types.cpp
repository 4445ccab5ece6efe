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

#include "causard/core/types.hpp"

#include <charconv>
#include <map>
#include <set>

#include "causard/core/error.hpp"

namespace causard {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

struct Unit {
  std::string_view suffix;
  TimeNs scale;
};

// Longest suffixes first so "ms" is not read as "s".
constexpr Unit kUnits[] = {
    {"ns", 1}, {"us", kMicrosecond}, {"ms", kMillisecond}, {"s", kSecond}};

}  // namespace

TimeNs parse_duration(std::string_view text) {
  const auto t = trim(text);
  for (const auto& unit : kUnits) {
    if (t.size() <= unit.suffix.size() || !t.ends_with(unit.suffix)) continue;
    const auto digits = t.substr(0, t.size() - unit.suffix.size());
    TimeNs value = 0;
    auto [ptr, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) break;
    if (value > UINT64_MAX / unit.scale) {
      throw ParseError("duration out of range: '" + std::string(text) + "'");
    }
    return value * unit.scale;
  }
  throw ParseError("malformed duration '" + std::string(text) +
                   "' (expected <integer><ns|us|ms|s>)");
}

std::string format_duration(TimeNs value) {
  if (value == 0) return "0ns";
  for (auto it = std::rbegin(kUnits); it != std::rend(kUnits); ++it) {
    if (value % it->scale == 0) {
      return std::to_string(value / it->scale) + std::string(it->suffix);
    }
  }
  return std::to_string(value) + "ns";
}

SpeedupPct::SpeedupPct(int value) : value_(value) {
  if (value < 0 || value > kMax || value % kStep != 0) {
    throw DomainError("speedup must be a multiple of 5 in [0, 100], got " +
                      std::to_string(value));
  }
}

std::string SourceLocation::str() const {
  return file + ":" + std::to_string(line);
}

SourceLocation parse_location(std::string_view text) {
  const auto t = trim(text);
  const auto colon = t.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw ParseError("malformed location '" + std::string(text) +
                     "' (expected <file>:<line>)");
  }
  const auto num = t.substr(colon + 1);
  std::uint32_t line = 0;
  auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), line);
  if (num.empty() || ec != std::errc{} || ptr != num.data() + num.size()) {
    throw ParseError("malformed line number in location '" +
                     std::string(text) + "'");
  }
  if (line == 0) {
    throw ParseError("line numbers start at 1 in location '" +
                     std::string(text) + "'");
  }
  return SourceLocation{std::string(t.substr(0, colon)), line};
}

bool glob_match(std::string_view pattern, std::string_view path) {
  // Classic two-pointer matcher, extended with a second backtrack point for
  // `**`. A single `*` may only resume at positions within the same segment.
  if (pattern.empty()) return path.empty();
  if (pattern.starts_with("**")) {
    auto rest = pattern.substr(2);
    // "**/" also matches zero leading segments.
    if (rest.starts_with('/') && glob_match(rest.substr(1), path)) return true;
    for (std::size_t i = 0; i <= path.size(); ++i) {
      if (glob_match(rest, path.substr(i))) return true;
    }
    return false;
  }
  if (pattern.front() == '*') {
    auto rest = pattern.substr(1);
    for (std::size_t i = 0; i <= path.size(); ++i) {
      if (glob_match(rest, path.substr(i))) return true;
      if (i < path.size() && path[i] == '/') break;
    }
    return false;
  }
  if (path.empty()) return false;
  if (pattern.front() == '?') {
    return path.front() != '/' && glob_match(pattern.substr(1), path.substr(1));
  }
  return pattern.front() == path.front() &&
         glob_match(pattern.substr(1), path.substr(1));
}

bool Scope::matches_file(std::string_view file) const {
  for (const auto& p : patterns_) {
    if (glob_match(p, file)) return true;
  }
  return false;
}

bool in_scope(const SourceLocation& loc, const Scope& scope) {
  return scope.matches_file(loc.file);
}

std::string_view to_string(ProgressKind kind) {
  switch (kind) {
    case ProgressKind::kSource:
      return "source";
    case ProgressKind::kSampled:
      return "sampled";
    case ProgressKind::kLatencyBegin:
      return "latency-begin";
    case ProgressKind::kLatencyEnd:
      return "latency-end";
  }
  return "?";
}

void validate_progress_points(const std::vector<ProgressPoint>& points) {
  std::set<std::string> names;
  std::map<std::string, int> begins, ends;
  for (const auto& p : points) {
    if (p.name.empty()) throw ParseError("progress point with empty name");
    if (!names.insert(p.name).second) {
      throw ParseError("duplicate progress point '" + p.name + "'");
    }
    if (p.kind == ProgressKind::kLatencyBegin) ++begins[p.latency_key];
    if (p.kind == ProgressKind::kLatencyEnd) ++ends[p.latency_key];
    if (p.kind == ProgressKind::kSampled && !p.sampled_line) {
      throw ParseError("sampled progress point '" + p.name +
                       "' has no line");
    }
  }
  for (const auto& [key, n] : ends) {
    if (begins[key] != 1 || n != 1) {
      throw ParseError("latency end '" + key +
                       "' must pair with exactly one begin");
    }
  }
  for (const auto& [key, n] : begins) {
    if (ends[key] != 1 || n != 1) {
      throw ParseError("latency begin '" + key +
                       "' must pair with exactly one end");
    }
  }
}

}  // namespace causard
