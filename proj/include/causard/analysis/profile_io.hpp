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

#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "causard/engine/engine.hpp"

namespace causard::analysis {

inline constexpr int kFormatVersion = 1;

/// Run metadata stored with the totals.
struct ProfileMeta {
  std::string source;  // "sim" or "live"
  std::uint64_t seed = 0;
  engine::EngineConfig config;
  std::vector<std::string> scope;
  std::vector<std::string> warnings;
};

struct Profile {
  std::vector<engine::ExperimentRecord> records;
  /// Absent when the run ended before writing its totals.
  std::optional<engine::RunTotals> totals;
  std::optional<ProfileMeta> meta;
  std::vector<std::string> warnings;
};

/// One JSON object per line. Experiment records come first, the totals
/// object last.
std::string record_to_json(const engine::ExperimentRecord& record);
std::string totals_to_json(const engine::RunTotals& totals,
                           const ProfileMeta& meta);

/// Throws ProfileFormatError naming the first bad line, or both versions
/// on a format_version mismatch.
Profile read_profile(std::istream& in);
Profile read_profile_file(const std::string& path);

void write_profile(std::ostream& out, const Profile& profile);

/// Appends records as they arrive so a crash loses at most the record being
/// written.
class ProfileWriter {
 public:
  explicit ProfileWriter(const std::string& path);

  void write(const engine::ExperimentRecord& record);
  void finish(const engine::RunTotals& totals, const ProfileMeta& meta);

 private:
  std::ofstream out_;
};

}  // namespace causard::analysis
