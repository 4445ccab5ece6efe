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

#include "causard/analysis/profile_io.hpp"

#include <json.hpp>
#include <sstream>

#include "causard/core/error.hpp"

namespace causard::analysis {
namespace {

using nlohmann::json;

json config_to_json(const engine::EngineConfig& c) {
  json j = {{"period_ns", c.sampling.period},
            {"batch_size", c.sampling.batch_size},
            {"min_visits", c.min_visits},
            {"experiment_ns", c.experiment_duration},
            {"cooloff_ns", c.cooloff},
            {"seed", c.seed},
            {"selection_timeout_factor", c.selection_timeout_factor}};
  j["fixed_line"] = c.fixed_line ? json(c.fixed_line->str()) : json(nullptr);
  j["fixed_speedup"] =
      c.fixed_speedup ? json(c.fixed_speedup->value()) : json(nullptr);
  return j;
}

engine::EngineConfig config_from_json(const json& j) {
  engine::EngineConfig c;
  c.sampling.period = j.at("period_ns").get<TimeNs>();
  c.sampling.batch_size = j.at("batch_size").get<std::uint32_t>();
  c.min_visits = j.at("min_visits").get<std::uint64_t>();
  c.experiment_duration = j.at("experiment_ns").get<TimeNs>();
  c.cooloff = j.at("cooloff_ns").get<TimeNs>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.selection_timeout_factor = j.value("selection_timeout_factor", 10u);
  if (!j.at("fixed_line").is_null())
    c.fixed_line = parse_location(j.at("fixed_line").get<std::string>());
  if (!j.at("fixed_speedup").is_null())
    c.fixed_speedup = SpeedupPct(j.at("fixed_speedup").get<int>());
  return c;
}

json line_counts_to_json(const std::map<SourceLocation, std::uint64_t>& m) {
  json j = json::object();
  for (const auto& [loc, n] : m) j[loc.str()] = n;
  return j;
}

std::map<SourceLocation, std::uint64_t> line_counts_from_json(const json& j) {
  std::map<SourceLocation, std::uint64_t> m;
  for (const auto& [key, value] : j.items())
    m[parse_location(key)] = value.get<std::uint64_t>();
  return m;
}

engine::ExperimentRecord record_from_json(const json& j) {
  engine::ExperimentRecord r;
  r.line = parse_location(j.at("line").get<std::string>());
  r.speedup = SpeedupPct(j.at("speedup").get<int>());
  r.delay_size = j.at("delay_ns").get<TimeNs>();
  r.wall_duration = j.at("wall_ns").get<TimeNs>();
  r.delay_count = j.at("delay_count").get<std::uint64_t>();
  r.inserted_delay_total = j.at("inserted_ns").get<TimeNs>();
  r.effective_duration = j.at("effective_ns").get<TimeNs>();
  r.progress_deltas =
      j.at("progress").get<std::map<std::string, std::uint64_t>>();
  r.selected_samples = j.at("selected_samples").get<std::uint64_t>();
  r.observed_time = j.at("observed_ns").get<TimeNs>();
  return r;
}

void totals_from_json(const json& j, Profile& profile) {
  engine::RunTotals t;
  t.wall_time = j.at("wall_ns").get<TimeNs>();
  t.runtime = j.at("runtime_ns").get<TimeNs>();
  t.samples = line_counts_from_json(j.at("samples"));
  t.undistorted_time = j.at("undistorted_ns").get<TimeNs>();
  t.undistorted_samples = line_counts_from_json(j.at("undistorted_samples"));
  t.progress = j.at("progress").get<std::map<std::string, std::uint64_t>>();
  for (const auto& [key, v] : j.at("latency").items())
    t.latency[key] = {v.at("begins").get<std::uint64_t>(),
                      v.at("ends").get<std::uint64_t>(),
                      v.at("inflight_ns").get<std::uint64_t>()};
  t.experiments = j.at("experiments").get<std::uint64_t>();
  t.selection_timeouts = j.at("selection_timeouts").get<std::uint64_t>();
  profile.totals = std::move(t);

  ProfileMeta meta;
  meta.source = j.value("source", "");
  meta.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("config")) meta.config = config_from_json(j.at("config"));
  meta.scope = j.value("scope", std::vector<std::string>{});
  meta.warnings = j.value("warnings", std::vector<std::string>{});
  for (const auto& w : meta.warnings) profile.warnings.push_back(w);
  profile.meta = std::move(meta);
}

}  // namespace

std::string record_to_json(const engine::ExperimentRecord& r) {
  json j = {{"format_version", kFormatVersion},
            {"type", "experiment"},
            {"line", r.line.str()},
            {"speedup", r.speedup.value()},
            {"delay_ns", r.delay_size},
            {"wall_ns", r.wall_duration},
            {"delay_count", r.delay_count},
            {"inserted_ns", r.inserted_delay_total},
            {"effective_ns", r.effective_duration},
            {"progress", r.progress_deltas},
            {"selected_samples", r.selected_samples},
            {"observed_ns", r.observed_time}};
  return j.dump();
}

std::string totals_to_json(const engine::RunTotals& t, const ProfileMeta& meta) {
  json latency = json::object();
  for (const auto& [key, v] : t.latency)
    latency[key] = {{"begins", v.begins},
                    {"ends", v.ends},
                    {"inflight_ns", v.inflight_ns}};
  json j = {{"format_version", kFormatVersion},
            {"type", "totals"},
            {"wall_ns", t.wall_time},
            {"runtime_ns", t.runtime},
            {"samples", line_counts_to_json(t.samples)},
            {"undistorted_ns", t.undistorted_time},
            {"undistorted_samples", line_counts_to_json(t.undistorted_samples)},
            {"progress", t.progress},
            {"latency", latency},
            {"experiments", t.experiments},
            {"selection_timeouts", t.selection_timeouts},
            {"source", meta.source},
            {"seed", meta.seed},
            {"config", config_to_json(meta.config)},
            {"scope", meta.scope},
            {"warnings", meta.warnings}};
  return j.dump();
}

Profile read_profile(std::istream& in) {
  Profile profile;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "profile line " + std::to_string(number) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ProfileFormatError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object() || !j.contains("format_version"))
      throw ProfileFormatError(where + "missing format_version");
    const auto version = j.at("format_version");
    if (!version.is_number_integer() || version.get<int>() != kFormatVersion)
      throw ProfileFormatError(where + "unsupported format_version " +
                               version.dump() + " (this build reads version " +
                               std::to_string(kFormatVersion) + ")");
    if (profile.totals)
      throw ProfileFormatError(where + "data after the totals record");
    try {
      const auto type = j.at("type").get<std::string>();
      if (type == "experiment") {
        profile.records.push_back(record_from_json(j));
      } else if (type == "totals") {
        totals_from_json(j, profile);
      } else {
        throw ProfileFormatError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw ProfileFormatError(where + e.what());
    } catch (const Error& e) {
      throw ProfileFormatError(where + e.what());
    }
  }
  if (!profile.totals)
    profile.warnings.push_back(
        "profile has no totals record (run did not finish); "
        "phase correction disabled");
  return profile;
}

Profile read_profile_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProfileFormatError("cannot open profile '" + path + "'");
  return read_profile(in);
}

void write_profile(std::ostream& out, const Profile& profile) {
  for (const auto& r : profile.records) out << record_to_json(r) << '\n';
  if (profile.totals)
    out << totals_to_json(*profile.totals, profile.meta.value_or(ProfileMeta{}))
        << '\n';
}

ProfileWriter::ProfileWriter(const std::string& path) : out_(path) {
  if (!out_) throw Error("cannot write profile '" + path + "'");
}

void ProfileWriter::write(const engine::ExperimentRecord& record) {
  out_ << record_to_json(record) << '\n' << std::flush;
}

void ProfileWriter::finish(const engine::RunTotals& totals,
                           const ProfileMeta& meta) {
  out_ << totals_to_json(totals, meta) << '\n' << std::flush;
}

}  // namespace causard::analysis
