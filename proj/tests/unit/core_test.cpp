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

#include "causard/core/error.hpp"
#include "causard/core/types.hpp"

namespace causard {
namespace {

TEST(Duration, ParsesEveryUnit) {
  EXPECT_EQ(parse_duration("7ns"), 7u);
  EXPECT_EQ(parse_duration("1000us"), kMillisecond);
  EXPECT_EQ(parse_duration("955ms"), 955 * kMillisecond);
  EXPECT_EQ(parse_duration("2s"), 2 * kSecond);
}

TEST(Duration, RejectsMalformedText) {
  for (const char* bad : {"", "10", "ms", "1.5ms", "-3ms", "10 ms", "5min"}) {
    EXPECT_THROW(parse_duration(bad), Error) << bad;
  }
}

TEST(Duration, FormatRoundTrips) {
  EXPECT_EQ(format_duration(250 * kMicrosecond), "250us");
  EXPECT_EQ(format_duration(kSecond), "1s");
  EXPECT_EQ(format_duration(1500 * kMicrosecond), "1500us");
  EXPECT_EQ(format_duration(0), "0ns");
  for (TimeNs v : {TimeNs{1}, TimeNs{999}, 3 * kMillisecond, 12 * kSecond}) {
    EXPECT_EQ(parse_duration(format_duration(v)), v);
  }
}

TEST(SpeedupPct, AcceptsMultiplesOfFive) {
  EXPECT_EQ(SpeedupPct(0).value(), 0);
  EXPECT_EQ(SpeedupPct(35).value(), 35);
  EXPECT_DOUBLE_EQ(SpeedupPct(100).fraction(), 1.0);
  EXPECT_THROW(SpeedupPct(7), DomainError);
  EXPECT_THROW(SpeedupPct(105), DomainError);
  EXPECT_THROW(SpeedupPct(-5), DomainError);
}

TEST(Location, ParsesAtLastColon) {
  const auto loc = parse_location("src/a:b.c:42");
  EXPECT_EQ(loc.file, "src/a:b.c");
  EXPECT_EQ(loc.line, 42u);
  EXPECT_EQ(loc.str(), "src/a:b.c:42");
  EXPECT_THROW(parse_location("main.c"), Error);
  EXPECT_THROW(parse_location("main.c:x"), Error);
}

TEST(Scope, SingleStarStaysInSegment) {
  EXPECT_TRUE(glob_match("src/*", "src/main.c"));
  EXPECT_FALSE(glob_match("src/*", "src/sub/main.c"));
  EXPECT_TRUE(glob_match("src/**", "src/sub/main.c"));
  EXPECT_TRUE(glob_match("**/*.c", "a/b/c.c"));
  EXPECT_FALSE(glob_match("*.c", "main.h"));
}

TEST(Scope, EmptyMatchesNothingAndEverythingMatchesAll) {
  EXPECT_FALSE(Scope().matches_file("main.c"));
  EXPECT_TRUE(Scope::everything().matches_file("lib/deep/x.c"));
  EXPECT_TRUE(in_scope({"main.c", 5}, Scope({"main.c"})));
  EXPECT_FALSE(in_scope({"libc.c", 1}, Scope({"main.c"})));
}

TEST(ProgressPoints, LatencyPairsMustMatch) {
  validate_progress_points({ProgressPoint::latency_begin("req"),
                            ProgressPoint::latency_end("req"),
                            ProgressPoint::source("done")});
  EXPECT_THROW(validate_progress_points({ProgressPoint::latency_begin("req")}),
               ParseError);
  EXPECT_THROW(validate_progress_points({ProgressPoint::source("a"),
                                         ProgressPoint::source("a")}),
               ParseError);
}

}  // namespace
}  // namespace causard
