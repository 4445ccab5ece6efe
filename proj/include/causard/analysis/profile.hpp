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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causard/core/types.hpp"
#include "causard/engine/engine.hpp"

namespace causard::analysis {

/// One experiment's contribution to a merged point.
struct ExperimentSample {
  TimeNs effective_duration = 0;
  std::map<std::string, std::uint64_t> visits;
  friend auto operator<=>(const ExperimentSample&,
                          const ExperimentSample&) = default;
};

/// Every experiment with the same line and speedup, added together.
struct MergedPoint {
  std::uint64_t experiments = 0;
  std::map<std::string, std::uint64_t> visits;
  TimeNs effective_duration = 0;
  std::uint64_t selected_samples = 0;  // summed s_obs
  TimeNs observed_time = 0;            // summed t_obs
  TimeNs inserted_delay = 0;
  /// Kept sorted so merging is order-independent.
  std::vector<ExperimentSample> samples;

  void add(const MergedPoint& other);
  friend bool operator==(const MergedPoint&, const MergedPoint&) = default;
};

/// line -> speedup percent -> merged point.
using MergedProfile = std::map<SourceLocation, std::map<int, MergedPoint>>;

MergedProfile merge_records(std::span<const engine::ExperimentRecord> records);
/// Adds `other` into `into`; associative and commutative.
void merge_into(MergedProfile& into, const MergedProfile& other);

/// Percent change in program performance when the progress period goes
/// from `baseline` to `sped_up`. Negative means a slowdown.
double program_speedup(double baseline_period, double sped_up_period);

/// Scales a speedup measured while a line was selected down to whole-run
/// terms: raw * (observed_time / observed_samples) * (samples / runtime).
double phase_correct(double raw, std::uint64_t observed_samples,
                     TimeNs observed_time, std::uint64_t samples,
                     TimeNs runtime);

struct LatencyEstimate {
  double in_flight = 0;     // L: time-averaged items in flight
  double arrival_rate = 0;  // lambda: begins per second
  double latency_ns = 0;    // W = L / lambda
};

/// Little's Law over one window. Throws DomainError when nothing began and
/// InstabilityError when more than `tolerance` of the begun items never
/// ended.
LatencyEstimate estimate_latency(std::uint64_t begins, std::uint64_t ends,
                                 double inflight_integral_ns, TimeNs window,
                                 double tolerance = 0.05);

enum class Classification { kOpportunity, kFlat, kContention };
std::string_view to_string(Classification c);

/// Which sample rate the phase correction compares with the whole run.
enum class PhaseCorrection {
  kNone,
  /// The line's sample rate over all of its experiments against its rate
  /// over the whole run.
  kLineRate,
  /// The line's rate during its 0% experiments against its rate while no
  /// delays were inserted anywhere.
  kBaselineRate,
  /// Each point's own rate against the whole-run rate.
  /// Both rates are per wall-clock second, pauses included.
  kPerPoint,
};

struct ProfileOptions {
  /// Progress point that defines throughput. Empty picks the first
  /// throughput point in the profile.
  std::string progress;
  std::size_t min_speedups = 5;
  PhaseCorrection correction = PhaseCorrection::kLineRate;
  double flat_threshold = 0.05;
};

struct CurvePoint {
  int speedup = 0;               // line speedup, percent
  double program_speedup = 0;    // percent, phase corrected
  double raw_speedup = 0;        // percent, before correction
  double std_error = 0;          // percent
  std::uint64_t experiments = 0;
  std::uint64_t visits = 0;
  TimeNs effective_duration = 0;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct LineProfile {
  SourceLocation line;
  std::map<int, MergedPoint> points;
  double baseline_period = 0;  // ns per visit at 0%
  double correction = 1;       // factor applied to every raw point
  std::vector<CurvePoint> curve;
  double slope = 0;
  Classification classification = Classification::kFlat;
  bool low_confidence = false;
  friend bool operator==(const LineProfile&, const LineProfile&) = default;
};

/// Picks the progress point used when the caller names none.
std::string default_progress_point(const MergedProfile& merged,
                                   const engine::RunTotals* totals);

/// Drops lines without a 0% point or with too few distinct speedups, then
/// builds each line's curve. `totals` enables phase correction.
std::vector<LineProfile> build_profiles(const MergedProfile& merged,
                                        const engine::RunTotals* totals,
                                        const ProfileOptions& options = {});

/// Unweighted least-squares slope of program speedup against line speedup,
/// both as fractions.
double regression_slope(const std::vector<CurvePoint>& curve);

/// Fills slope and classification, sorted by slope, steepest first.
std::vector<LineProfile> rank_lines(std::vector<LineProfile> profiles,
                                    double flat_threshold = 0.05);

/// Linear interpolation of the curve at `speedup_pct`; nullopt outside it.
std::optional<double> interpolate(const LineProfile& profile,
                                  double speedup_pct);

}  // namespace causard::analysis
