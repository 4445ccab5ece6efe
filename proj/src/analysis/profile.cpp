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

#include "causard/analysis/profile.hpp"

#include <algorithm>
#include <cmath>

#include "causard/core/error.hpp"

namespace causard::analysis {
namespace {

bool is_latency_point(const std::string& name) {
  auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() &&
           name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends_with(".begin") || ends_with(".end");
}

std::uint64_t visits_of(const std::map<std::string, std::uint64_t>& visits,
                        const std::string& name) {
  auto it = visits.find(name);
  return it == visits.end() ? 0 : it->second;
}

template <class Map>
std::uint64_t count_or_zero(const Map& m, const SourceLocation& line) {
  auto it = m.find(line);
  return it == m.end() ? 0 : it->second;
}

// The sample-rate ratio that scales raw points of `line`: the rate the
// line was sampled at over the whole run against its rate inside `point`.
// Nullopt when it cannot be computed.
std::optional<double> correction_factor(const SourceLocation& line,
                                        const MergedPoint& point,
                                        const engine::RunTotals& totals,
                                        PhaseCorrection mode) {
  std::uint64_t samples = count_or_zero(totals.samples, line);
  TimeNs runtime = totals.wall_time;
  if (mode == PhaseCorrection::kBaselineRate && totals.undistorted_time > 0) {
    samples = count_or_zero(totals.undistorted_samples, line);
    runtime = totals.undistorted_time;
  }
  if (point.selected_samples == 0 || runtime == 0) return std::nullopt;
  return phase_correct(1.0, point.selected_samples, point.observed_time,
                       samples, runtime);
}

}  // namespace

void MergedPoint::add(const MergedPoint& other) {
  experiments += other.experiments;
  for (const auto& [name, n] : other.visits) visits[name] += n;
  effective_duration += other.effective_duration;
  selected_samples += other.selected_samples;
  observed_time += other.observed_time;
  inserted_delay += other.inserted_delay;
  samples.insert(samples.end(), other.samples.begin(), other.samples.end());
  std::sort(samples.begin(), samples.end());
}

MergedProfile merge_records(std::span<const engine::ExperimentRecord> records) {
  MergedProfile merged;
  for (const auto& r : records) {
    auto& point = merged[r.line][r.speedup.value()];
    ++point.experiments;
    for (const auto& [name, n] : r.progress_deltas) point.visits[name] += n;
    point.effective_duration += r.effective_duration;
    point.selected_samples += r.selected_samples;
    point.observed_time += r.observed_time;
    point.inserted_delay += r.inserted_delay_total;
    point.samples.push_back({r.effective_duration, r.progress_deltas});
  }
  for (auto& [line, points] : merged)
    for (auto& [pct, point] : points)
      std::sort(point.samples.begin(), point.samples.end());
  return merged;
}

void merge_into(MergedProfile& into, const MergedProfile& other) {
  for (const auto& [line, points] : other)
    for (const auto& [pct, point] : points) into[line][pct].add(point);
}

double program_speedup(double baseline_period, double sped_up_period) {
  if (!(baseline_period > 0) || !(sped_up_period > 0))
    throw DomainError("progress periods must be positive");
  return 100.0 * (1.0 - sped_up_period / baseline_period);
}

double phase_correct(double raw, std::uint64_t observed_samples,
                     TimeNs observed_time, std::uint64_t samples,
                     TimeNs runtime) {
  if (observed_samples == 0)
    throw DomainError("uncorrectable: no samples of the line were observed");
  if (runtime == 0) throw DomainError("uncorrectable: zero runtime");
  // Multiply before dividing so equal rates give a factor of exactly 1.
  const double numerator = static_cast<double>(observed_time) * samples;
  const double denominator = static_cast<double>(observed_samples) * runtime;
  return raw * (numerator / denominator);
}

LatencyEstimate estimate_latency(std::uint64_t begins, std::uint64_t ends,
                                 double inflight_integral_ns, TimeNs window,
                                 double tolerance) {
  if (begins == 0 || window == 0)
    throw DomainError("no arrivals in the window; latency is undefined");
  if (static_cast<double>(ends) < (1.0 - tolerance) * begins)
    throw InstabilityError("queue is not stable: " + std::to_string(ends) +
                           " departures for " + std::to_string(begins) +
                           " arrivals");
  LatencyEstimate e;
  e.in_flight = inflight_integral_ns / static_cast<double>(window);
  e.arrival_rate = static_cast<double>(begins) * 1e9 / static_cast<double>(window);
  e.latency_ns = inflight_integral_ns / static_cast<double>(begins);
  return e;
}

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::kOpportunity: return "opportunity";
    case Classification::kFlat: return "flat";
    case Classification::kContention: return "contention";
  }
  return "?";
}

std::string default_progress_point(const MergedProfile& merged,
                                   const engine::RunTotals* totals) {
  std::vector<std::string> names;
  if (totals)
    for (const auto& [name, n] : totals->progress) names.push_back(name);
  for (const auto& [line, points] : merged)
    for (const auto& [pct, point] : points)
      for (const auto& [name, n] : point.visits) names.push_back(name);
  std::sort(names.begin(), names.end());
  for (const auto& name : names)
    if (!is_latency_point(name)) return name;
  for (const auto& name : names)
    if (name.ends_with(".end")) return name;
  return names.empty() ? std::string{} : names.front();
}

std::vector<LineProfile> build_profiles(const MergedProfile& merged,
                                        const engine::RunTotals* totals,
                                        const ProfileOptions& options) {
  const auto progress = options.progress.empty()
                            ? default_progress_point(merged, totals)
                            : options.progress;
  std::vector<LineProfile> out;
  for (const auto& [line, points] : merged) {
    auto base = points.find(0);
    if (base == points.end() || points.size() < options.min_speedups) continue;
    const auto base_visits = visits_of(base->second.visits, progress);
    if (base_visits == 0 || base->second.effective_duration == 0) continue;

    LineProfile profile;
    profile.line = line;
    profile.points = points;
    profile.baseline_period =
        static_cast<double>(base->second.effective_duration) / base_visits;

    const bool correct =
        totals != nullptr && options.correction != PhaseCorrection::kNone;
    if (correct && options.correction != PhaseCorrection::kPerPoint) {
      // Every experiment on the line observed phase A; the baseline-rate
      // variant trusts only its 0% experiments.
      MergedPoint observed = base->second;
      if (options.correction == PhaseCorrection::kLineRate)
        for (const auto& [pct, point] : points)
          if (pct != 0) observed.add(point);
      auto factor = correction_factor(line, observed, *totals,
                                      options.correction);
      if (!factor) continue;
      profile.correction = *factor;
    }

    for (const auto& [pct, point] : points) {
      const auto visits = visits_of(point.visits, progress);
      if (visits == 0 || point.effective_duration == 0) continue;
      double factor = profile.correction;
      if (correct && options.correction == PhaseCorrection::kPerPoint) {
        auto f = correction_factor(line, point, *totals, options.correction);
        if (!f) continue;
        factor = *f;
      }
      CurvePoint c;
      c.speedup = pct;
      c.experiments = point.experiments;
      c.visits = visits;
      c.effective_duration = point.effective_duration;
      c.raw_speedup = program_speedup(
          profile.baseline_period,
          static_cast<double>(point.effective_duration) / visits);
      c.program_speedup = pct == 0 ? 0.0 : c.raw_speedup * factor;

      std::vector<double> estimates;
      for (const auto& s : point.samples) {
        const auto v = visits_of(s.visits, progress);
        if (v == 0 || s.effective_duration == 0) continue;
        estimates.push_back(program_speedup(
            profile.baseline_period,
            static_cast<double>(s.effective_duration) / v));
      }
      if (estimates.size() > 1) {
        double mean = 0;
        for (double e : estimates) mean += e;
        mean /= static_cast<double>(estimates.size());
        double ss = 0;
        for (double e : estimates) ss += (e - mean) * (e - mean);
        const double n = static_cast<double>(estimates.size());
        c.std_error = std::sqrt(ss / (n - 1)) / std::sqrt(n) * std::abs(factor);
      }
      profile.curve.push_back(c);
    }
    if (profile.curve.size() < std::max<std::size_t>(options.min_speedups, 2))
      continue;
    profile.low_confidence = profile.curve.size() < 3;
    out.push_back(std::move(profile));
  }
  return rank_lines(std::move(out), options.flat_threshold);
}

double regression_slope(const std::vector<CurvePoint>& curve) {
  if (curve.size() < 2) return 0;
  double mx = 0, my = 0;
  for (const auto& c : curve) {
    mx += c.speedup / 100.0;
    my += c.program_speedup / 100.0;
  }
  const double n = static_cast<double>(curve.size());
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (const auto& c : curve) {
    const double dx = c.speedup / 100.0 - mx;
    sxy += dx * (c.program_speedup / 100.0 - my);
    sxx += dx * dx;
  }
  return sxx == 0 ? 0 : sxy / sxx;
}

std::vector<LineProfile> rank_lines(std::vector<LineProfile> profiles,
                                    double flat_threshold) {
  for (auto& p : profiles) {
    p.slope = regression_slope(p.curve);
    p.low_confidence = p.low_confidence || p.curve.size() < 3;
    if (p.slope <= -flat_threshold) {
      p.classification = Classification::kContention;
    } else if (std::abs(p.slope) < flat_threshold) {
      p.classification = Classification::kFlat;
    } else {
      p.classification = Classification::kOpportunity;
    }
  }
  std::stable_sort(profiles.begin(), profiles.end(),
                   [](const LineProfile& a, const LineProfile& b) {
                     if (a.slope != b.slope) return a.slope > b.slope;
                     return a.line < b.line;
                   });
  return profiles;
}

std::optional<double> interpolate(const LineProfile& profile,
                                  double speedup_pct) {
  const auto& c = profile.curve;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i].speedup == speedup_pct) return c[i].program_speedup;
    if (i + 1 < c.size() && c[i].speedup < speedup_pct &&
        speedup_pct < c[i + 1].speedup) {
      const double t = (speedup_pct - c[i].speedup) /
                       static_cast<double>(c[i + 1].speedup - c[i].speedup);
      return c[i].program_speedup +
             t * (c[i + 1].program_speedup - c[i].program_speedup);
    }
  }
  return std::nullopt;
}

}  // namespace causard::analysis
