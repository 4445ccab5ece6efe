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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "causard/analysis/profile.hpp"
#include "causard/analysis/profile_io.hpp"

namespace causard::analysis {

enum class Format { kText, kJson, kCsv, kSvg };

/// Throws UsageError for anything but text, json, csv or svg.
Format parse_format(std::string_view name);

struct LatencyReport {
  std::string key;
  std::optional<LatencyEstimate> estimate;
  std::string error;  // why there is no estimate
};

struct Report {
  std::string progress;
  std::vector<LineProfile> profiles;  // ranked
  std::vector<LatencyReport> latency;
  std::vector<std::string> warnings;
};

/// Everything `causard report` shows for one profile file.
Report analyze(const Profile& profile, const ProfileOptions& options = {});

/// Deterministic rendering: identical reports give identical bytes.
std::string render_report(const Report& report, Format format);

}  // namespace causard::analysis
