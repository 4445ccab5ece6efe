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


#include <gtest/gtest.h>

#include <sstream>

#include "causard/analysis/profile.hpp"
#include "causard/analysis/profile_io.hpp"
#include "causard/analysis/report.hpp"
#include "causard/core/error.hpp"

namespace causard::analysis {
namespace {

using engine::ExperimentRecord;
using engine::RunTotals;

const SourceLocation kLine{"main.c", 10};
const SourceLocation kOther{"main.c", 20};

ExperimentRecord rec(const SourceLocation& line, int pct, std::uint64_t visits,
                     TimeNs effective = kSecond, std::uint64_t s_obs = 100) {
  ExperimentRecord r;
  r.line = line;
  r.speedup = SpeedupPct(pct);
  r.wall_duration = effective;
  r.effective_duration = effective;
  r.observed_time = effective;
  r.selected_samples = s_obs;
  r.progress_deltas["done"] = visits;
  return r;
}

// Visits per second that give `speedup_pct` program speedup over 100/s.
std::uint64_t visits_for(double speedup_pct) {
  return static_cast<std::uint64_t>(100.0 / (1.0 - speedup_pct / 100.0) + 0.5);
}

std::vector<ExperimentRecord> line_records(const SourceLocation& line,
                                           std::vector<int> pcts, double slope) {
  std::vector<ExperimentRecord> out{rec(line, 0, 100)};
  for (int p : pcts) out.push_back(rec(line, p, visits_for(slope * p)));
  return out;
}

TEST(Merge, AddsVisitsAndDurations) {
  const std::vector<ExperimentRecord> records{rec(kLine, 25, 10), rec(kLine, 25, 14)};
  const auto merged = merge_records(records);
  const auto& p = merged.at(kLine).at(25);
  EXPECT_EQ(p.visits.at("done"), 24u);
  EXPECT_EQ(p.effective_duration, 2 * kSecond);
  EXPECT_EQ(p.experiments, 2u);
}

TEST(Merge, SingleRecordIsItself) {
  const std::vector<ExperimentRecord> records{rec(kLine, 50, 7)};
  const auto& p = merge_records(records).at(kLine).at(50);
  EXPECT_EQ(p.visits.at("done"), 7u);
  EXPECT_EQ(p.effective_duration, kSecond);
}

TEST(Merge, SeparateRunsMergeLikeOneRun) {
  const std::vector<ExperimentRecord> a{rec(kLine, 0, 100), rec(kLine, 25, 110)};
  const std::vector<ExperimentRecord> b{rec(kLine, 25, 120), rec(kOther, 0, 90)};
  std::vector<ExperimentRecord> all(a);
  all.insert(all.end(), b.begin(), b.end());
  auto ab = merge_records(a);
  merge_into(ab, merge_records(b));
  auto ba = merge_records(b);
  merge_into(ba, merge_records(a));
  EXPECT_EQ(ab, merge_records(all));
  EXPECT_EQ(ab, ba);
}

TEST(ProgramSpeedup, PeriodRatio) {
  EXPECT_NEAR(program_speedup(10e6, 9e6), 10.0, 1e-12);
  EXPECT_EQ(program_speedup(10e6, 10e6), 0.0);
  EXPECT_NEAR(program_speedup(10e6, 12e6), -20.0, 1e-12);
}

TEST(PhaseCorrect, ScalesByRelativeRate) {
  EXPECT_NEAR(phase_correct(10.0, 100, kSecond, 500, 10 * kSecond), 5.0, 1e-12);
}

TEST(PhaseCorrect, EqualRatesGiveExactlyOne) {
  EXPECT_EQ(phase_correct(7.25, 100, kSecond, 1000, 10 * kSecond), 7.25);
  EXPECT_EQ(phase_correct(3.0, 37, 3 * kSecond, 111, 9 * kSecond), 3.0);
  for (std::uint64_t s = 1; s < 500; s += 7) {
    ASSERT_EQ(phase_correct(1.0, s, 3 * kMillisecond, s * 11, 33 * kMillisecond), 1.0);
  }
}

TEST(PhaseCorrect, NoObservedSamplesIsUncorrectable) {
  EXPECT_THROW(phase_correct(5.0, 0, kSecond, 10, kSecond), DomainError);
}

TEST(Latency, LittlesLaw) {
  // 100 arrivals per second, 5 in flight on average, over 10 s.
  const auto e = estimate_latency(1000, 1000, 5.0 * 10 * kSecond, 10 * kSecond);
  EXPECT_NEAR(e.arrival_rate, 100.0, 1e-9);
  EXPECT_NEAR(e.in_flight, 5.0, 1e-9);
  EXPECT_NEAR(e.latency_ns, 50.0 * kMillisecond, 1e-3);
  EXPECT_EQ(estimate_latency(10, 10, 0.0, kSecond).latency_ns, 0.0);
}

TEST(Latency, NoArrivalsOrUnstable) {
  EXPECT_THROW(estimate_latency(0, 0, 0.0, kSecond), DomainError);
  EXPECT_THROW(estimate_latency(1000, 500, 1e12, kSecond), InstabilityError);
}

TEST(BuildProfiles, DropsLinesWithoutBaseline) {
  auto records = line_records(kLine, {10, 25, 50, 75, 90}, 0.1);
  records.erase(records.begin());  // the 0% record
  EXPECT_TRUE(build_profiles(merge_records(records), nullptr).empty());
}

TEST(BuildProfiles, DropsLinesWithTooFewSpeedups) {
  const auto records = line_records(kLine, {25, 50, 75}, 0.1);
  EXPECT_TRUE(build_profiles(merge_records(records), nullptr).empty());
  ProfileOptions loose;
  loose.min_speedups = 4;
  EXPECT_EQ(build_profiles(merge_records(records), nullptr, loose).size(), 1u);
}

TEST(BuildProfiles, CurveStartsAtOrigin) {
  const auto records = line_records(kLine, {10, 25, 50, 75, 90}, 0.2);
  const auto profiles = build_profiles(merge_records(records), nullptr);
  ASSERT_EQ(profiles.size(), 1u);
  const auto& curve = profiles[0].curve;
  ASSERT_EQ(curve.size(), 6u);
  EXPECT_EQ(curve[0].speedup, 0);
  EXPECT_EQ(curve[0].program_speedup, 0.0);
  EXPECT_NEAR(curve.back().program_speedup, 18.0, 0.1);
}

TEST(BuildProfiles, CorrectionIsIdentityWhenRatesMatch) {
  // 100 samples per second in every experiment and over the whole run.
  auto records = line_records(kLine, {10, 25, 50, 75, 90}, 0.2);
  RunTotals totals;
  totals.wall_time = totals.runtime = 6 * kSecond;
  totals.samples[kLine] = 600;
  const auto merged = merge_records(records);
  const auto corrected = build_profiles(merged, &totals);
  const auto raw = build_profiles(merged, nullptr);
  ASSERT_EQ(corrected.size(), 1u);
  EXPECT_EQ(corrected[0].correction, 1.0);
  for (std::size_t i = 0; i < raw[0].curve.size(); ++i) {
    EXPECT_EQ(corrected[0].curve[i].program_speedup, raw[0].curve[i].program_speedup);
  }
}

TEST(BuildProfiles, HalfTimeLineIsHalved) {
  auto records = line_records(kLine, {10, 25, 50, 75, 90}, 0.2);
  RunTotals totals;
  totals.wall_time = totals.runtime = 12 * kSecond;
  totals.samples[kLine] = 600;  // same samples over twice the time
  const auto profiles = build_profiles(merge_records(records), &totals);
  ASSERT_EQ(profiles.size(), 1u);
  EXPECT_DOUBLE_EQ(profiles[0].correction, 0.5);
  EXPECT_NEAR(profiles[0].curve.back().program_speedup, 9.0, 0.1);
}

TEST(Rank, OrdersAndClassifies) {
  std::vector<ExperimentRecord> records;
  for (const auto& [line, slope] : std::vector<std::pair<SourceLocation, double>>{
           {{"a.c", 1}, 0.0}, {{"b.c", 1}, 0.4}, {{"c.c", 1}, -0.3}}) {
    auto r = line_records(line, {10, 25, 50, 75, 90}, slope);
    records.insert(records.end(), r.begin(), r.end());
  }
  const auto ranked = rank_lines(build_profiles(merge_records(records), nullptr));
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].line.file, "b.c");
  EXPECT_EQ(ranked[1].line.file, "a.c");
  EXPECT_EQ(ranked[2].line.file, "c.c");
  EXPECT_EQ(ranked[0].classification, Classification::kOpportunity);
  EXPECT_EQ(ranked[1].classification, Classification::kFlat);
  EXPECT_EQ(ranked[2].classification, Classification::kContention);
  EXPECT_NEAR(ranked[0].slope, 0.4, 0.01);
}

TEST(Rank, TwoPointsAreLowConfidence) {
  const auto records = line_records(kLine, {50}, 0.2);
  ProfileOptions loose;
  loose.min_speedups = 2;
  const auto ranked = rank_lines(build_profiles(merge_records(records), nullptr, loose));
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_TRUE(ranked[0].low_confidence);
  EXPECT_NEAR(ranked[0].slope, 0.2, 0.01);
}

Profile sample_profile() {
  Profile p;
  p.records = line_records(kLine, {10, 25, 50, 75, 90}, 0.2);
  auto more = line_records(kOther, {5, 20, 40, 60, 100}, 0.0);
  p.records.insert(p.records.end(), more.begin(), more.end());
  RunTotals t;
  t.wall_time = t.runtime = 12 * kSecond;
  t.samples[kLine] = 1200;
  t.samples[kOther] = 1200;
  t.progress["done"] = 1200;
  p.totals = t;
  p.meta = ProfileMeta{"sim", 1, {}, {"**"}, {}};
  return p;
}

TEST(Report, EmptyProfileSaysNoExperiments) {
  const auto text = render_report(analyze(Profile{}), Format::kText);
  EXPECT_NE(text.find("no experiments"), std::string::npos);
}

TEST(Report, CsvHasRowPerCurvePoint) {
  const auto csv = render_report(analyze(sample_profile()), Format::kCsv);
  std::istringstream in(csv);
  std::string row;
  int rows = 0;
  std::getline(in, row);
  EXPECT_EQ(row, "line,speedup,program_speedup,stderr");
  while (std::getline(in, row)) ++rows;
  EXPECT_EQ(rows, 12);
}

TEST(Report, EveryFormatIsDeterministic) {
  for (auto f : {Format::kText, Format::kJson, Format::kCsv, Format::kSvg}) {
    EXPECT_EQ(render_report(analyze(sample_profile()), f),
              render_report(analyze(sample_profile()), f));
  }
  EXPECT_THROW(parse_format("pdf"), UsageError);
  EXPECT_EQ(parse_format("svg"), Format::kSvg);
}

TEST(ProfileIo, RoundTrips) {
  const auto p = sample_profile();
  std::stringstream buf;
  write_profile(buf, p);
  const auto back = read_profile(buf);
  EXPECT_EQ(back.records, p.records);
  ASSERT_TRUE(back.totals);
  EXPECT_EQ(*back.totals, *p.totals);
}

TEST(ProfileIo, ReportsFirstBadLine) {
  std::stringstream buf;
  buf << record_to_json(rec(kLine, 0, 1)) << '\n' << "{not json\n";
  try {
    read_profile(buf);
    FAIL() << "expected a format error";
  } catch (const ProfileFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ProfileIo, VersionMismatchNamesBothVersions) {
  std::stringstream buf("{\"format_version\": 99, \"type\": \"experiment\"}\n");
  try {
    read_profile(buf);
    FAIL() << "expected a format error";
  } catch (const ProfileFormatError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("99"), std::string::npos);
    EXPECT_NE(what.find("version 1"), std::string::npos);
  }
}

TEST(ProfileIo, MissingTotalsIsAWarning) {
  std::stringstream buf;
  buf << record_to_json(rec(kLine, 0, 1)) << '\n';
  const auto p = read_profile(buf);
  EXPECT_EQ(p.records.size(), 1u);
  EXPECT_FALSE(p.totals);
  EXPECT_FALSE(p.warnings.empty());
}

}  // namespace
}  // namespace causard::analysis
