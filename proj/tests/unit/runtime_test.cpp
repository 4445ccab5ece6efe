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

#include <algorithm>
#include <functional>
#include <random>
#include <thread>
#include <vector>

#include "causard/runtime/delay.hpp"
#include "causard/runtime/locations.hpp"
#include "causard/runtime/progress.hpp"

namespace causard::runtime {
namespace {

// Sleeps by bookkeeping only; oversleeps by a fixed amount when asked.
class FakeSleeper final : public Sleeper {
 public:
  explicit FakeSleeper(TimeNs overshoot = 0) : overshoot_(overshoot) {}
  TimeNs sleep(TimeNs requested) override {
    requests.push_back(requested);
    return requested + overshoot_;
  }
  std::vector<TimeNs> requests;

 private:
  TimeNs overshoot_;
};

SamplingConfig one_ms() { return {kMillisecond, 10}; }

TEST(ComputeDelay, QuarterZeroAndFull) {
  EXPECT_EQ(compute_delay(SpeedupPct(25), one_ms()), 250 * kMicrosecond);
  EXPECT_EQ(compute_delay(SpeedupPct(0), one_ms()), 0u);
  EXPECT_EQ(compute_delay(SpeedupPct(100), one_ms()), kMillisecond);
}

TEST(ComputeDelay, RoundsToNearestNanosecond) {
  EXPECT_EQ(compute_delay(SpeedupPct(5), {1'001, 1}), 50u);   // 50.05
  EXPECT_EQ(compute_delay(SpeedupPct(50), {1'001, 1}), 501u);  // 500.5
}

TEST(SamplingConfig, RejectsZeroes) {
  EXPECT_THROW((SamplingConfig{0, 10}.validate()), std::exception);
  EXPECT_THROW((SamplingConfig{kMillisecond, 0}.validate()), std::exception);
}

struct Table {
  LocationTable table{Scope({"main.c"})};
  LocationId strlen_ = table.intern({"libc", 10});
  LocationId vfprintf_ = table.intern({"libc", 20});
  LocationId main5 = table.intern({"main.c", 5});
  LocationId lib1 = table.intern({"libc.c", 1});
  LocationId lib2 = table.intern({"libc.c", 2});
};

TEST(Attribute, InnermostInScopeFrame) {
  Table t;
  const std::vector<LocationId> printf_stack{t.strlen_, t.vfprintf_, t.main5};
  EXPECT_EQ(attribute_sample(printf_stack, t.table), t.main5);
  const std::vector<LocationId> direct{t.main5};
  EXPECT_EQ(attribute_sample(direct, t.table), t.main5);
  const std::vector<LocationId> none{t.lib1, t.lib2};
  EXPECT_EQ(attribute_sample(none, t.table), kNoLocation);
}

TEST(Attribute, SourceLocationOverload) {
  const std::vector<SourceLocation> frames{{"libc", 10}, {"libc", 20}, {"main.c", 5}};
  const auto got = attribute_sample(frames, Scope({"main.c"}));
  ASSERT_TRUE(got);
  EXPECT_EQ(got->str(), "main.c:5");
}

TEST(LocationTable, InternIsIdempotent) {
  LocationTable table(Scope::everything());
  const auto a = table.intern({"x.c", 1});
  EXPECT_EQ(table.intern({"x.c", 1}), a);
  EXPECT_NE(table.intern({"x.c", 2}), a);
  EXPECT_EQ(table.location(a).str(), "x.c:1");
  EXPECT_EQ(*table.find({"x.c", 1}), a);
  EXPECT_FALSE(table.find({"y.c", 1}));
}

// A running experiment on `line` with d = 250us and the given counts.
struct Rig {
  LocationTable table{Scope::everything()};
  LocationId line = table.intern({"main.c", 42});
  LocationId other = table.intern({"main.c", 7});
  GlobalDelayState global;
  LineSampleCounters lines{table.capacity()};
  SamplingContext ctx{table, global, &lines, nullptr};

  Rig() { global.begin_experiment(line, 250 * kMicrosecond, 0); }

  Sample on(LocationId id, TimeNs ts = 1) {
    const std::vector<LocationId> frames{id};
    return Sample::of(0, ts, frames);
  }
  std::vector<Sample> batch(int selected, int others = 0) {
    std::vector<Sample> b;
    for (int i = 0; i < selected; ++i) b.push_back(on(line));
    for (int i = 0; i < others; ++i) b.push_back(on(other));
    return b;
  }
};

TEST(ProcessSamples, MissedDelaysBecomeObligation) {
  Rig rig;
  rig.global.raise_to(5);
  ThreadDelayState t;
  t.local = 3;
  EXPECT_EQ(process_thread_samples(t, rig.ctx, rig.batch(0, 4)), 500 * kMicrosecond);
  EXPECT_EQ(t.local, 5u);
}

TEST(ProcessSamples, OwnSamplesRaiseGlobal) {
  Rig rig;
  rig.global.raise_to(5);
  ThreadDelayState t;
  t.local = 5;
  EXPECT_EQ(process_thread_samples(t, rig.ctx, rig.batch(2)), 0u);
  EXPECT_EQ(rig.global.count(), 7u);
  EXPECT_EQ(t.local, 7u);
}

TEST(ProcessSamples, NoExperimentLeavesCountersAlone) {
  Rig rig;
  rig.global.end_experiment(10);
  ThreadDelayState t;
  EXPECT_EQ(process_thread_samples(t, rig.ctx, rig.batch(3)), 0u);
  EXPECT_EQ(t.local, 0u);
  EXPECT_EQ(rig.global.count(), 0u);
}

TEST(ProcessSamples, CountsEveryAttributedSample) {
  Rig rig;
  ThreadDelayState t;
  process_thread_samples(t, rig.ctx, rig.batch(2, 3));
  EXPECT_EQ(rig.lines.total(rig.line), 2u);
  EXPECT_EQ(rig.lines.total(rig.other), 3u);
}

TEST(ProcessSamples, DebtsFromEarlierExperimentsAreSkipped) {
  Rig rig;
  ThreadDelayState a;
  process_thread_samples(a, rig.ctx, rig.batch(4));
  rig.global.end_experiment(10);
  rig.global.begin_experiment(rig.line, 250 * kMicrosecond, 20);
  ThreadDelayState b;  // still at 0, four units behind the old experiment
  EXPECT_EQ(process_thread_samples(b, rig.ctx, {}), 0u);
  EXPECT_EQ(b.skipped_units, 4u);
  EXPECT_EQ(b.local, 4u);
}

TEST(ExecutePause, RecordsOversleep) {
  ThreadDelayState t;
  FakeSleeper sleeper(30 * kMicrosecond);
  execute_pause(t, 500 * kMicrosecond, sleeper);
  EXPECT_EQ(t.excess_sleep, 30 * kMicrosecond);
  EXPECT_EQ(sleeper.requests, std::vector<TimeNs>{500 * kMicrosecond});
}

TEST(ExecutePause, ExcessCoversDebt) {
  ThreadDelayState t;
  t.excess_sleep = 600 * kMicrosecond;
  FakeSleeper sleeper;
  execute_pause(t, 500 * kMicrosecond, sleeper);
  EXPECT_TRUE(sleeper.requests.empty());
  EXPECT_EQ(t.excess_sleep, 100 * kMicrosecond);
}

TEST(ExecutePause, ZeroIsNoOp) {
  ThreadDelayState t;
  t.excess_sleep = 7;
  FakeSleeper sleeper;
  execute_pause(t, 0, sleeper);
  EXPECT_TRUE(sleeper.requests.empty());
  EXPECT_EQ(t.excess_sleep, 7u);
}

TEST(ExecutePause, ExcessIdentityIsExact) {
  std::mt19937_64 rng(3);
  ThreadDelayState t;
  FakeSleeper sleeper(17);
  for (int i = 0; i < 1000; ++i) {
    execute_pause(t, rng() % 2000, sleeper);
    ASSERT_EQ(t.total_slept - t.total_obligation, t.excess_sleep);
  }
}

TEST(ThreadCreate, ChildInheritsLocal) {
  ThreadDelayState parent;
  parent.local = 7;
  parent.excess_sleep = 99;
  const auto child = on_thread_create(parent, 3);
  EXPECT_EQ(child.local, 7u);
  EXPECT_EQ(child.excess_sleep, 0u);
  EXPECT_EQ(child.thread, 3u);
  EXPECT_EQ(on_thread_create(ThreadDelayState{}, 1).local, 0u);
}

TEST(WakeOp, CatchesUpBeforeWaking) {
  Rig rig;
  rig.global.raise_to(4);
  ThreadDelayState t;
  t.local = 2;
  FakeSleeper sleeper;
  before_wake_op(t, rig.ctx, sleeper);
  EXPECT_EQ(sleeper.requests, std::vector<TimeNs>{500 * kMicrosecond});
  EXPECT_EQ(t.local, 4u);
}

TEST(WakeOp, NothingOwedOrBaseline) {
  Rig rig;
  rig.global.raise_to(4);
  ThreadDelayState t;
  t.local = 4;
  FakeSleeper sleeper;
  before_wake_op(t, rig.ctx, sleeper);
  EXPECT_TRUE(sleeper.requests.empty());

  Rig baseline;
  baseline.global.end_experiment(1);
  baseline.global.begin_experiment(baseline.line, 0, 2);
  ThreadDelayState u;
  auto b = baseline.batch(3);
  u.pending = b;
  before_wake_op(u, baseline.ctx, sleeper);
  EXPECT_TRUE(sleeper.requests.empty());
}

TEST(BlockOp, CreditsWithoutSleeping) {
  GlobalDelayState g;
  g.raise_to(6);
  ThreadDelayState t;
  t.local = 3;
  after_block_op(t, g);
  EXPECT_EQ(t.local, 6u);
  EXPECT_EQ(t.credited_units, 3u);
  after_block_op(t, g);
  EXPECT_EQ(t.credited_units, 3u);
}

std::uint64_t units(const ThreadDelayState& t) {
  return t.inherited_units + t.paid_units + t.self_units + t.credited_units +
         t.skipped_units;
}

// Every ordering of up to three batches per thread, each with 0-3
// selected-line samples. The reference pauses every other thread once per
// visit, so thread j owes S - s_j. The counter scheme owes G - s_j for the
// final global count G <= S: the same delays minus a part common to all
// threads, which does not change their relative timing.
TEST(CounterModel, MatchesPausePerVisitReferenceUpToCommonDelay) {
  constexpr int kThreads = 3;
  int cases = 0;
  std::function<void(std::vector<std::pair<int, int>>&)> walk =
      [&](std::vector<std::pair<int, int>>& plan) {
        if (!plan.empty()) {
          Rig rig;
          std::vector<ThreadDelayState> ts(kThreads);
          FakeSleeper sleeper;
          std::vector<int> own(kThreads, 0);
          for (auto [who, k] : plan) {
            auto b = rig.batch(k);
            own[who] += k;
            execute_pause(ts[who], process_thread_samples(ts[who], rig.ctx, b), sleeper);
          }
          for (auto& t : ts) before_wake_op(t, rig.ctx, sleeper);
          const auto g = rig.global.count();
          int total = 0;
          for (int v : own) total += v;
          ASSERT_LE(g, static_cast<std::uint64_t>(total));
          for (int j = 0; j < kThreads; ++j) {
            const auto& t = ts[j];
            ASSERT_EQ(t.local, g);
            ASSERT_EQ(t.paid_units + t.self_units, g);
            ASSERT_EQ(t.total_obligation, t.paid_units * 250 * kMicrosecond);
            const std::uint64_t reference = total - own[j];
            ASSERT_EQ(reference - t.paid_units, static_cast<std::uint64_t>(total) - g);
          }
          ++cases;
        }
        if (plan.size() == 4) return;
        for (int who = 0; who < kThreads; ++who) {
          for (int k = 0; k <= 3; ++k) {
            plan.emplace_back(who, k);
            walk(plan);
            plan.pop_back();
          }
        }
      };
  std::vector<std::pair<int, int>> plan;
  walk(plan);
  EXPECT_GT(cases, 20000);
}

// Random interleavings of batches, wake ops, block credits, thread creation
// and experiment changes. Units are conserved at every step and every
// thread ends level with the global count once settled.
TEST(CounterModel, ConservationUnderRandomInterleavings) {
  std::mt19937_64 rng(20261016);
  for (int run = 0; run < 10000; ++run) {
    Rig rig;
    std::vector<ThreadDelayState> ts(2 + rng() % 4);
    for (std::uint32_t i = 0; i < ts.size(); ++i) ts[i].thread = i;
    FakeSleeper sleeper(rng() % 3);
    const int steps = 5 + static_cast<int>(rng() % 40);
    for (int s = 0; s < steps; ++s) {
      auto& t = ts[rng() % ts.size()];
      switch (rng() % 6) {
        case 0:
        case 1: {
          auto b = rig.batch(static_cast<int>(rng() % 4), static_cast<int>(rng() % 3));
          execute_pause(t, process_thread_samples(t, rig.ctx, b), sleeper);
          break;
        }
        case 2:
          t.pending = rig.batch(static_cast<int>(rng() % 3));
          before_wake_op(t, rig.ctx, sleeper);
          break;
        case 3:
          after_block_op(t, rig.global);
          break;
        case 4:
          if (ts.size() < 8) {
            const auto child = on_thread_create(t, static_cast<std::uint32_t>(ts.size()));
            ts.push_back(child);
          }
          break;
        default:
          if (rng() % 4 == 0) {
            rig.global.end_experiment(s);
            rig.global.begin_experiment(rng() % 2 ? rig.line : rig.other,
                                        (rng() % 5) * 100 * kMicrosecond, s);
          }
      }
      for (const auto& u : ts) {
        ASSERT_EQ(u.local, units(u)) << "run " << run;
        ASSERT_EQ(u.total_slept - u.total_obligation, u.excess_sleep);
      }
    }
    for (auto& t : ts) before_wake_op(t, rig.ctx, sleeper);
    for (const auto& t : ts) {
      ASSERT_EQ(t.local, rig.global.count()) << "run " << run;
      ASSERT_EQ(t.local, units(t));
    }
  }
}

TEST(GlobalState, ExactlyOneClaimWins) {
  for (int round = 0; round < 50; ++round) {
    GlobalDelayState g;
    g.open_selection();
    std::atomic<int> wins{0};
    std::vector<std::thread> threads;
    for (LocationId id = 0; id < 8; ++id) {
      threads.emplace_back([&, id] {
        if (g.try_claim(id)) ++wins;
      });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(wins.load(), 1);
    EXPECT_NE(g.claimed(), kNoLocation);
  }
}

TEST(GlobalState, ClaimsOnlyWhileSelecting) {
  GlobalDelayState g;
  EXPECT_FALSE(g.try_claim(3));
  g.open_selection();
  EXPECT_TRUE(g.try_claim(3));
  EXPECT_FALSE(g.try_claim(4));
  EXPECT_EQ(g.claimed(), 3u);
}

TEST(Progress, CountsVisits) {
  ProgressCounters p;
  const auto tx = p.register_point(ProgressPoint::source("tx_done"));
  for (int i = 0; i < 3; ++i) p.visit(tx);
  EXPECT_EQ(p.count(tx), 3u);
  EXPECT_EQ(p.register_point(ProgressPoint::source("tx_done")), tx);
  EXPECT_THROW(p.visit("never"), std::exception);
}

TEST(Progress, ConcurrentVisitsAreAtomic) {
  ProgressCounters p;
  const auto id = p.register_point(ProgressPoint::source("hit"));
  std::vector<std::thread> threads;
  std::atomic<bool> monotone{true};
  std::thread reader([&] {
    std::uint64_t last = 0;
    for (int i = 0; i < 2000; ++i) {
      const auto now = p.snapshot(0).counts[id];
      if (now < last) monotone = false;
      last = now;
    }
  });
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 1000; ++i) p.visit(id);
    });
  }
  for (auto& th : threads) th.join();
  reader.join();
  EXPECT_EQ(p.count(id), 8000u);
  EXPECT_TRUE(monotone.load());
}

TEST(Progress, SampledPointCountsSamplesOnItsLine) {
  LocationTable table(Scope::everything());
  ProgressCounters p;
  const auto id =
      p.register_point(ProgressPoint::sampled("rows", {"db.c", 9}), &table);
  const auto row = *table.find({"db.c", 9});
  const auto other = table.intern({"db.c", 3});
  const std::vector<LocationId> on{other, row};
  const std::vector<LocationId> off{other};
  p.on_sample(on);
  p.on_sample(off);
  p.on_sample(on);
  EXPECT_EQ(p.count(id), 2u);
}

TEST(Progress, LatencyIntegral) {
  ProgressCounters p;
  const auto b = p.register_point(ProgressPoint::latency_begin("req"));
  const auto e = p.register_point(ProgressPoint::latency_end("req"));
  p.visit(b, 0);
  p.visit(b, 10);
  p.visit(e, 20);
  p.visit(e, 50);  // 1 for 10ns, 2 for 10ns, 1 for 30ns
  const auto snap = p.snapshot(60);
  ASSERT_EQ(snap.latency.size(), 1u);
  EXPECT_EQ(snap.latency[0].begins, 2u);
  EXPECT_EQ(snap.latency[0].ends, 2u);
  EXPECT_EQ(snap.latency[0].inflight_ns, 10u + 20u + 30u);
}

}  // namespace
}  // namespace causard::runtime
