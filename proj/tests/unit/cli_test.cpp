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
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "causard/analysis/profile_io.hpp"

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string output;  // stdout and stderr together
};

Outcome causard(const std::string& args) {
  const auto cmd = std::string(CAUSARD_BIN) + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return o;
  std::array<char, 4096> buf{};
  while (auto n = fread(buf.data(), 1, buf.size(), pipe)) o.output.append(buf.data(), n);
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string scenario(const std::string& name) {
  return std::string(CAUSARD_SCENARIOS) + "/" + name;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("causard_cli_" + std::to_string(getpid()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  fs::path dir_;
};

const char* kSmallJoin = R"(thread main:
  repeat 200
    spawn a
    spawn b
    join a
    join b
    progress done
thread a:
  compute main.c:10 100ms
thread b:
  compute main.c:20 95500us
)";

TEST_F(Cli, OracleOfJoinScenario) {
  const auto o = causard("simulate " + scenario("join2.wl") + " --oracle example.cpp:12 100");
  EXPECT_EQ(o.code, 0) << o.output;
  EXPECT_EQ(o.output, "4.50%\n");
}

TEST_F(Cli, SimulateWritesProfileAndIsDeterministic) {
  const auto wl = write("join.wl", kSmallJoin);
  const auto a = causard("simulate " + wl + " --seed 7 --experiment 50ms --out " + path("a.causard"));
  const auto b = causard("simulate " + wl + " --seed 7 --experiment 50ms --out " + path("b.causard"));
  ASSERT_EQ(a.code, 0) << a.output;
  ASSERT_EQ(b.code, 0) << b.output;
  std::stringstream ra, rb;
  ra << std::ifstream(path("a.causard")).rdbuf();
  rb << std::ifstream(path("b.causard")).rdbuf();
  EXPECT_FALSE(ra.str().empty());
  EXPECT_EQ(ra.str(), rb.str());
  const auto profile = causard::analysis::read_profile_file(path("a.causard"));
  EXPECT_GT(profile.records.size(), 20u);
  EXPECT_TRUE(profile.totals);
}

TEST_F(Cli, BadWorkloadNamesTheMutex) {
  const auto o = causard("simulate " + scenario("bad_undeclared.wl"));
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.output.find("m1"), std::string::npos) << o.output;
}

TEST_F(Cli, DeadlockExitsWithThree) {
  const auto wl = write("dead.wl", "mutex m\nthread main:\n  spawn w\n  lock m\n  join w\n  unlock m\n"
                                   "  progress p\nthread w:\n  lock m\n  unlock m\n");
  const auto o = causard("simulate " + wl);
  EXPECT_EQ(o.code, 3) << o.output;
}

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(causard("").code, 1);
  EXPECT_EQ(causard("simulate").code, 1);
  EXPECT_EQ(causard("simulate " + scenario("join2.wl") + " --period 10").code, 1);
  EXPECT_EQ(causard("simulate " + scenario("join2.wl") + " --fixed-speedup 7").code, 1);
  EXPECT_EQ(causard("simulate " + scenario("join2.wl") + " --bogus").code, 1);
  EXPECT_EQ(causard("report x.causard --format pdf").code, 1);
  EXPECT_EQ(causard("run").code, 1);
}

TEST_F(Cli, ReportFormats) {
  const auto wl = write("join.wl", kSmallJoin);
  ASSERT_EQ(causard("simulate " + wl + " --experiment 20ms --out " + path("p.causard")).code, 0);
  const auto text = causard("report " + path("p.causard") + " --format text");
  EXPECT_EQ(text.code, 0);
  EXPECT_NE(text.output.find("slope"), std::string::npos) << text.output;
  const auto svg = causard("report " + path("p.causard") + " --format svg --out " + path("c.svg"));
  EXPECT_EQ(svg.code, 0) << svg.output;
  std::stringstream s;
  s << std::ifstream(path("c.svg")).rdbuf();
  EXPECT_EQ(s.str().rfind("<svg", 0), 0u);
}

TEST_F(Cli, ReportMergesSeveralRuns) {
  const auto wl = write("join.wl", kSmallJoin);
  ASSERT_EQ(causard("simulate " + wl + " --seed 1 --experiment 20ms --out " + path("m1.causard")).code, 0);
  ASSERT_EQ(causard("simulate " + wl + " --seed 2 --experiment 20ms --out " + path("m2.causard")).code, 0);
  const auto report = [&](const std::string& files) {
    const auto o = causard("report " + files + " --format json");
    EXPECT_EQ(o.code, 0) << o.output;
    std::size_t experiments = 0;
    const auto doc = nlohmann::json::parse(o.output);
    for (const auto& line : doc["lines"])
      for (const auto& point : line["curve"]) experiments += point["experiments"].get<std::size_t>();
    return experiments;
  };
  const auto a = report(path("m1.causard"));
  const auto b = report(path("m2.causard"));
  EXPECT_GT(a, 0u);
  // Merging can lift short experiments over the visit threshold, never drop any.
  EXPECT_GE(report(path("m1.causard") + " " + path("m2.causard")), a + b);
}

TEST_F(Cli, CorruptProfileReportsLine) {
  causard::engine::ExperimentRecord rec;
  rec.line = {"main.c", 10};
  const auto valid = causard::analysis::record_to_json(rec);
  const auto p = write("bad.causard", valid + "\n\ngarbage\n" + valid + "\n");
  const auto o = causard("report " + p);
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.output.find("line 3"), std::string::npos) << o.output;
}

TEST_F(Cli, AccuracyWithZeroDelay) {
  const auto wl = write("join.wl", kSmallJoin);
  const auto o = causard("accuracy " + wl + " --line main.c:10 --delay 0ns --experiment 20ms");
  EXPECT_EQ(o.code, 0) << o.output;
  EXPECT_NE(o.output.find("predicted 0.00%  observed 0.00%"), std::string::npos) << o.output;
  EXPECT_EQ(causard("accuracy " + wl + " --line nowhere.c:1 --delay 1ms").code, 2);
}

TEST_F(Cli, RunLiveProgramWithBaselineOnly) {
  const auto o = causard("run --fixed-speedup 0 --experiment 50ms --out " + path("live.causard") +
                         " -- " + LIVE_MIXER + " 60 100000");
  ASSERT_EQ(o.code, 0) << o.output;
  const auto profile = causard::analysis::read_profile_file(path("live.causard"));
  ASSERT_TRUE(profile.totals);
  EXPECT_FALSE(profile.records.empty());
  for (const auto& r : profile.records) {
    EXPECT_EQ(r.speedup.value(), 0);
    EXPECT_EQ(r.inserted_delay_total, 0u);
  }
  EXPECT_EQ(profile.totals->progress.at("round"), 8u * 60u);
}

TEST_F(Cli, RunPropagatesExitCode) {
  const auto o = causard("run --out " + path("x.causard") + " -- /bin/false");
  EXPECT_EQ(o.code, 1) << o.output;
}

}  // namespace
