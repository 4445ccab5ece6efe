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

#include "causard/sim/protocols.hpp"

#include "causard/core/error.hpp"

namespace causard::sim {
namespace {

std::string first_throughput_point(const Workload& workload) {
  for (const auto& p : workload.progress)
    if (p.kind == ProgressKind::kSource) return p.name;
  for (const auto& p : workload.progress)
    if (p.kind == ProgressKind::kLatencyEnd) return p.name;
  throw DomainError("workload has no progress point");
}

double period(const SimResult& r, const std::string& progress) {
  auto it = r.progress.find(progress);
  if (it == r.progress.end() || it->second == 0)
    throw DomainError("progress point '" + progress + "' is never visited");
  return static_cast<double>(r.wall) / static_cast<double>(it->second);
}

}  // namespace

analysis::ProfileOptions profile_options(const Workload& workload,
                                         const std::string& progress) {
  analysis::ProfileOptions options;
  options.progress = progress.empty() ? first_throughput_point(workload) : progress;
  return options;
}

Prediction predict(const Workload& workload, const SourceLocation& line,
                   SpeedupPct speedup, const std::string& progress,
                   engine::EngineConfig config, const SimParams& params,
                   LineChoice choice) {
  if (!workload.has_line(line))
    throw DomainError(line.str() + " does not appear in the workload");
  auto options = profile_options(workload, progress);
  Prediction out{line, speedup, 0, 0, 0, 0};
  out.oracle = oracle_speedup(workload, line, speedup, options.progress);

  if (choice == LineChoice::kFixed) config.fixed_line = line;
  config.fixed_speedup = SpeedupPct(0);
  const auto base = profile_simulated(workload, config, params);
  config.fixed_speedup = speedup;
  const auto sped = profile_simulated(workload, config, params);

  auto merged = analysis::merge_records(base.records);
  analysis::merge_into(merged, analysis::merge_records(sped.records));
  auto totals = *base.totals;
  totals.merge(*sped.totals);
  if (auto it = sped.totals->samples.find(line); it != sped.totals->samples.end())
    out.samples = it->second;

  options.min_speedups = speedup.value() == 0 ? 1 : 2;
  auto read = [&](const analysis::ProfileOptions& opts) {
    for (const auto& profile : analysis::build_profiles(merged, &totals, opts)) {
      if (profile.line != line) continue;
      auto value = analysis::interpolate(profile, speedup.value());
      if (!value) throw DomainError("no curve point at the requested speedup");
      return *value;
    }
    throw DomainError("no usable experiments for " + line.str());
  };
  out.predicted = read(options);
  options.correction = analysis::PhaseCorrection::kNone;
  out.raw = read(options);
  return out;
}

AccuracyResult accuracy_protocol(const Workload& workload,
                                 const SourceLocation& line, TimeNs delay,
                                 const AccuracyOptions& options) {
  if (!workload.has_line(line))
    throw DomainError(line.str() + " does not appear in the workload");
  auto profile_opts = profile_options(workload, options.progress);

  SimParams baseline_params = options.params;
  baseline_params.mode = Mode::kBaseline;
  const auto original = simulate(workload, baseline_params);
  AccuracyResult out;
  out.mean_line_time = original.lines.at(line).mean_time();
  if (delay == 0) return out;

  const auto slowed = with_inserted_delay(workload, line, delay);
  const auto slowed_run = simulate(slowed, baseline_params);
  out.observed = analysis::program_speedup(period(slowed_run, profile_opts.progress),
                                           period(original, profile_opts.progress));
  out.line_speedup = 100.0 * static_cast<double>(delay) /
                     static_cast<double>(out.mean_line_time + delay);

  auto config = options.config;
  config.fixed_line = line;
  const auto profiled = profile_simulated(slowed, config, options.params);
  if (auto it = profiled.totals->samples.find(line);
      it != profiled.totals->samples.end())
    out.samples = it->second;
  const auto profiles = analysis::build_profiles(
      analysis::merge_records(profiled.records), &*profiled.totals, profile_opts);
  if (profiles.empty())
    throw DomainError("the profile of " + line.str() +
                      " has too few distinct speedups; run longer");
  auto value = analysis::interpolate(profiles.front(), out.line_speedup);
  if (!value) throw DomainError("curve does not cover the needed speedup");
  out.predicted = *value;
  return out;
}

}  // namespace causard::sim
