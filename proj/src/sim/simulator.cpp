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

#include "causard/sim/simulator.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <memory>
#include <random>
#include <unordered_map>

#include "causard/core/error.hpp"

namespace causard::sim {
namespace {

using runtime::LocationId;
using runtime::kNoLocation;

constexpr TimeNs kNever = std::numeric_limits<TimeNs>::max();
constexpr int kSettleRounds = 8;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

class VirtualSleeper final : public runtime::Sleeper {
 public:
  TimeNs sleep(TimeNs requested) override {
    slept += requested;
    return requested;
  }
  TimeNs slept = 0;
};

enum class Status { kIdle, kReady, kComputing, kPausing, kBlocked, kDone };
enum class WaitKind { kNone, kMutex, kCond, kBarrier, kSpin, kJoin };

struct Frame {
  const std::vector<Segment>* body;
  std::size_t index = 0;
  std::uint64_t left = 0;         // remaining repeat iterations
  const Segment* block = nullptr;  // null for the thread body
  TimeNs started = 0;              // when the current spin round began
};

struct ThreadRt {
  Status status = Status::kIdle;
  std::vector<Frame> frames;

  // Current timed segment.
  TimeNs remaining = 0;
  TimeNs length = 0;
  const Segment* running = nullptr;
  const std::vector<LocationId>* stack = nullptr;
  LocationId line = kNoLocation;

  TimeNs cpu = 0;
  TimeNs next_sample = 0;
  TimeNs pause_end = 0;
  int settle_rounds = 0;  // pauses taken before the pending sync op

  WaitKind wait = WaitKind::kNone;
  std::uint32_t wait_object = 0;
  bool advance_on_acquire = true;  // false: re-check a WaitFor predicate
  std::vector<std::uint32_t> joiners;
  std::vector<std::uint64_t> arrival_generation;

  runtime::ThreadDelayState delay;
  std::mt19937_64 rng;
  ThreadStats stats;
};

struct MutexRt {
  std::optional<std::uint32_t> owner;
  std::deque<std::uint32_t> waiters;
};

struct BarrierRt {
  std::uint32_t arrived = 0;
  std::uint64_t generation = 0;
  std::vector<std::uint32_t> waiters;
  std::vector<std::uint32_t> spinners;  // parked in rounds that take no time
};

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

class Simulator {
 public:
  Simulator(const Workload& workload, const SimParams& params,
            const engine::EngineConfig* engine_config)
      : w_(workload),
        p_(params),
        locations_(params.scope),
        lines_(locations_.capacity()),
        ctx_{locations_, global_, &lines_, &progress_} {
    w_.validate();
    p_.sampling.validate();
    for (const auto& point : w_.progress)
      progress_ids_.push_back(progress_.register_point(point, &locations_));
    mutexes_.resize(w_.mutexes.size());
    cond_waiters_.resize(w_.condvars.size());
    barriers_.resize(w_.barriers.size());
    for (const auto& c : w_.counters) counters_.push_back(c.initial);
    threads_.resize(w_.threads.size());
    for (std::uint32_t i = 0; i < threads_.size(); ++i) {
      auto& t = threads_[i];
      t.stats.name = w_.threads[i].name;
      t.arrival_generation.assign(w_.barriers.size(), 0);
      t.rng.seed(splitmix(p_.seed ^ splitmix(i + 1)));
      t.next_sample = first_sample(t);
      t.delay.thread = i;
    }
    for (const auto& line : w_.lines()) locations_.intern(line);

    if (engine_config) {
      engine_config->validate();
      p_.sampling = engine_config->sampling;
      p_.mode = Mode::kBaseline;
      p_.per_visit = false;
      engine_ = std::make_unique<engine::ExperimentEngine>(
          *engine_config,
          engine::RuntimeHandles{locations_, global_, progress_, lines_},
          [this](const engine::ExperimentRecord& r) {
            result_.records.push_back(r);
          });
    } else if (p_.mode != Mode::kBaseline) {
      if (!p_.line) throw DomainError("actual and virtual modes need a line");
      target_ = locations_.intern(*p_.line);
    }
  }

  SimResult run() {
    if (p_.mode == Mode::kVirtual) {
      delay_size_ = p_.per_visit ? per_visit_delay()
                                 : runtime::compute_delay(p_.speedup, p_.sampling);
      global_.begin_experiment(target_, delay_size_, 0);
    }
    if (engine_) {
      engine_->start(0);
      engine_wake_ = engine_->step(0);
    }
    spawn(w_.entry, nullptr);

    TimeNs last = 0;
    while (true) {
      run_ready();
      if (entry_done()) break;
      TimeNs next = kNever;
      for (auto& t : threads_) next = std::min(next, next_event(t));
      if (next == kNever) throw_deadlock();
      if (engine_) next = std::min(next, engine_wake_);
      if (next > p_.time_limit)
        throw Error("simulated time limit of " + format_duration(p_.time_limit) +
                    " exceeded");
      advance_clock(next - last);
      now_ = last = next;
      if (engine_ && engine_wake_ == now_) engine_wake_ = engine_->step(now_);
      for (std::uint32_t i = 0; i < threads_.size(); ++i) handle_event(i);
    }
    return finish();
  }

 private:
  // ---- sampling -----------------------------------------------------------

  bool sampling() const { return !p_.per_visit; }

  TimeNs interval(ThreadRt& t) {
    const auto period = p_.sampling.period;
    if (p_.jitter == 0) return period;
    const auto j = std::min(p_.jitter, period - 1);
    std::uniform_int_distribution<TimeNs> dist(0, 2 * j);
    return period - j + dist(t.rng);
  }

  TimeNs first_sample(ThreadRt& t) {
    if (p_.jitter == 0) return p_.sampling.period;
    std::uniform_int_distribution<TimeNs> dist(1, p_.sampling.period);
    return dist(t.rng);
  }

  TimeNs per_visit_delay() const {
    std::optional<TimeNs> duration;
    for (const auto& t : w_.threads) visit_computes(t.body, [&](const Compute& c) {
      if (c.line() != *p_.line) return;
      if (duration && *duration != c.duration)
        throw DomainError("per-visit mode needs every run of " + p_.line->str() +
                          " to have the same duration");
      duration = c.duration;
    });
    if (!duration) throw DomainError(p_.line->str() + " never runs");
    return shortened_by(*duration, p_.speedup);
  }

  template <class Fn>
  static void visit_computes(const std::vector<Segment>& body, Fn&& fn) {
    for (const auto& seg : body) {
      if (auto* c = std::get_if<Compute>(&seg.op)) fn(*c);
      if (auto* r = std::get_if<Repeat>(&seg.op)) visit_computes(r->body, fn);
      if (auto* s = std::get_if<Spin>(&seg.op)) visit_computes(s->body, fn);
    }
  }

  // Starts a pause of whatever `sleeper` accumulated. Returns true if the
  // thread now pauses.
  bool begin_pause(ThreadRt& t, const VirtualSleeper& sleeper) {
    if (sleeper.slept == 0) return false;
    t.status = Status::kPausing;
    t.pause_end = now_ + sleeper.slept;
    t.stats.paused += sleeper.slept;
    return true;
  }

  bool collect_debts(ThreadRt& t) {
    VirtualSleeper sleeper;
    auto obligation = runtime::process_thread_samples(t.delay, ctx_, {});
    runtime::execute_pause(t.delay, obligation, sleeper);
    return begin_pause(t, sleeper);
  }

  // Pays outstanding delays before a synchronization operation. Returns true
  // if the thread must pause first. Delays issued during that pause are paid
  // on retry, up to a few rounds.
  bool settle(ThreadRt& t) {
    if (t.settle_rounds >= kSettleRounds) return false;
    ++t.settle_rounds;
    VirtualSleeper sleeper;
    runtime::before_wake_op(t.delay, ctx_, sleeper);
    if (begin_pause(t, sleeper)) return true;
    t.settle_rounds = kSettleRounds;
    return false;
  }

  void take_sample(ThreadRt& t) {
    t.next_sample += interval(t);
    t.delay.pending.push_back(runtime::Sample::of(
        t.delay.thread, now_, {t.stack->data(), t.stack->size()}));
    if (t.delay.pending.size() < p_.sampling.batch_size) return;
    VirtualSleeper sleeper;
    auto obligation =
        runtime::process_thread_samples(t.delay, ctx_, t.delay.pending);
    t.delay.pending.clear();
    runtime::execute_pause(t.delay, obligation, sleeper);
    begin_pause(t, sleeper);
  }

  // A completed run of the selected line in per-visit mode: the running
  // thread counts it and every other running thread pauses at once.
  void visit_sample(ThreadRt& t) {
    auto sample = runtime::Sample::of(t.delay.thread, now_,
                                      {t.stack->data(), t.stack->size()});
    VirtualSleeper sleeper;
    auto obligation = runtime::process_thread_samples(t.delay, ctx_, {&sample, 1});
    runtime::execute_pause(t.delay, obligation, sleeper);
    begin_pause(t, sleeper);
    // Threads finishing at this very instant settle before their next run.
    for (auto& other : threads_)
      if (&other != &t && other.status == Status::kComputing && other.remaining > 0)
        collect_debts(other);
  }

  // ---- clock --------------------------------------------------------------

  TimeNs next_event(const ThreadRt& t) const {
    switch (t.status) {
      case Status::kComputing: {
        TimeNs next = now_ + t.remaining;
        if (sampling()) next = std::min(next, now_ + (t.next_sample - t.cpu));
        return next;
      }
      case Status::kPausing:
        return t.pause_end;
      default:
        return kNever;
    }
  }

  void advance_clock(TimeNs elapsed) {
    if (elapsed == 0) return;
    for (auto& t : threads_) {
      if (t.status != Status::kComputing) continue;
      t.remaining -= elapsed;
      t.cpu += elapsed;
      t.stats.busy += elapsed;
    }
  }

  void handle_event(std::uint32_t index) {
    auto& t = threads_[index];
    if (t.status == Status::kComputing) {
      if (sampling() && t.cpu == t.next_sample) take_sample(t);
      if (t.remaining == 0) complete_compute(t);
    } else if (t.status == Status::kPausing && t.pause_end == now_) {
      if (p_.per_visit && collect_debts(t)) return;
      t.status = t.remaining > 0 ? Status::kComputing : Status::kReady;
    }
  }

  // ---- segments -----------------------------------------------------------

  const std::vector<LocationId>& frames_of(const Segment& seg) {
    auto [it, inserted] = frames_.try_emplace(&seg);
    if (inserted) {
      if (auto* c = std::get_if<Compute>(&seg.op)) {
        for (const auto& loc : c->stack) it->second.push_back(locations_.intern(loc));
      } else {
        it->second.push_back(
            locations_.intern(std::get<InsertedDelay>(seg.op).line));
      }
    }
    return it->second;
  }

  void start_timed(ThreadRt& t, const Segment& seg, TimeNs duration) {
    if (p_.per_visit && t.settle_rounds < kSettleRounds) {
      t.settle_rounds = kSettleRounds;
      if (collect_debts(t)) return;
    }
    t.settle_rounds = 0;
    t.running = &seg;
    t.stack = &frames_of(seg);
    t.line = t.stack->front();
    t.length = duration;
    t.remaining = duration;
    if (duration == 0) {
      complete_compute(t);
    } else {
      t.status = Status::kComputing;
    }
  }

  void complete_compute(ThreadRt& t) {
    const Segment& seg = *t.running;
    t.running = nullptr;
    if (std::holds_alternative<Compute>(seg.op)) {
      auto& stats = line_stats_[t.line];
      ++stats.executions;
      stats.total_time += t.length;
    } else {
      ++delay_trips_[t.line];
    }
    if (t.status != Status::kPausing) t.status = Status::kReady;
    advance(t);
    if (p_.per_visit && t.line == target_ && std::holds_alternative<Compute>(seg.op))
      visit_sample(t);
  }

  TimeNs duration_of(const Compute& c) const {
    if (p_.mode == Mode::kActual && c.line() == *p_.line)
      return c.duration - shortened_by(c.duration, p_.speedup);
    return c.duration;
  }

  TimeNs duration_of(const InsertedDelay& d) const {
    if (p_.mode == Mode::kActual && d.line == *p_.line)
      return d.duration - shortened_by(d.duration, p_.speedup);
    return d.duration;
  }

  void advance(ThreadRt& t) {
    ++t.frames.back().index;
    t.settle_rounds = 0;
  }

  // Returns the segment the thread is about to execute, unwinding finished
  // blocks. Null once the thread body is done.
  const Segment* current(ThreadRt& t) {
    while (true) {
      auto& f = t.frames.back();
      if (f.index < f.body->size()) return &(*f.body)[f.index];
      if (!f.block) return nullptr;
      if (std::holds_alternative<Repeat>(f.block->op)) {
        if (--f.left > 0) {
          f.index = 0;
          continue;
        }
      } else if (auto* s = std::get_if<Spin>(&f.block->op)) {
        if (still_spinning(t, s->barrier)) {
          f.index = 0;
          if (f.started == now_) {
            // A round that takes no time would spin forever at this
            // instant; wait for the barrier to open instead.
            block(t, WaitKind::kSpin, s->barrier);
            barriers_[s->barrier].spinners.push_back(index_of(t));
            return nullptr;
          }
          f.started = now_;
          continue;
        }
      }
      t.frames.pop_back();
      ++t.frames.back().index;
    }
  }

  std::uint32_t index_of(const ThreadRt& t) const {
    return static_cast<std::uint32_t>(&t - threads_.data());
  }

  bool still_spinning(const ThreadRt& t, std::uint32_t barrier) const {
    return barriers_[barrier].generation == t.arrival_generation[barrier];
  }

  void run_ready() {
    bool progressed = true;
    while (progressed && !entry_done()) {
      progressed = false;
      for (std::uint32_t i = 0; i < threads_.size() && !entry_done(); ++i) {
        while (threads_[i].status == Status::kReady && !entry_done()) {
          step(i);
          progressed = true;
        }
      }
      if (engine_ && engine_->phase() == engine::ExperimentEngine::Phase::kSelecting &&
          global_.claimed() != kNoLocation)
        engine_wake_ = engine_->step(now_);
    }
  }

  void step(std::uint32_t index) {
    auto& t = threads_[index];
    const Segment* seg = current(t);
    if (t.status == Status::kBlocked) return;
    if (!seg) {
      exit_thread(index);
      return;
    }
    std::visit(
        Overloaded{
            [&](const Compute& op) { start_timed(t, *seg, duration_of(op)); },
            [&](const InsertedDelay& op) { start_timed(t, *seg, duration_of(op)); },
            [&](const Lock& op) {
              if (settle(t)) return;
              acquire(index, op.mutex, true);
            },
            [&](const Unlock& op) {
              if (settle(t)) return;
              release(op.mutex);
              advance(t);
            },
            [&](const BarrierWait& op) {
              if (settle(t)) return;
              arrive_and_wait(index, op.barrier);
            },
            [&](const CondWait& op) {
              if (settle(t)) return;
              cond_wait(index, op.cv, op.mutex, true);
            },
            [&](const CondSignal& op) {
              if (settle(t)) return;
              signal(op.cv);
              advance(t);
            },
            [&](const CondBroadcast& op) {
              if (settle(t)) return;
              while (!cond_waiters_[op.cv].empty()) signal(op.cv);
              advance(t);
            },
            [&](const Spawn& op) {
              spawn(op.thread, &t);
              advance(t);
            },
            [&](const Join& op) {
              if (settle(t)) return;
              auto& target = threads_[op.thread];
              if (target.status == Status::kDone) {
                advance(t);
              } else {
                block(t, WaitKind::kJoin, op.thread);
                target.joiners.push_back(index);
              }
            },
            [&](const Progress& op) {
              progress_.visit(progress_ids_[op.point], now_);
              advance(t);
            },
            [&](const LatencyBegin& op) {
              progress_.visit(progress_ids_[op.point], now_);
              open_items_[w_.progress[op.point].latency_key].push_back(now_);
              advance(t);
            },
            [&](const LatencyEnd& op) {
              progress_.visit(progress_ids_[op.point], now_);
              const auto& key = w_.progress[op.point].latency_key;
              auto& open = open_items_[key];
              if (!open.empty()) {
                auto& direct = direct_latency_[key];
                ++direct.items;
                direct.total += now_ - open.front();
                open.pop_front();
              }
              advance(t);
            },
            [&](const Add& op) {
              counters_[op.counter] += op.delta;
              advance(t);
            },
            [&](const WaitFor& op) {
              if (compare(counters_[op.counter], op.cmp, op.value)) {
                advance(t);
                return;
              }
              if (settle(t)) return;
              cond_wait(index, op.cv, op.mutex, false);
            },
            [&](const Arrive& op) {
              auto& b = barriers_[op.barrier];
              t.arrival_generation[op.barrier] = b.generation;
              if (++b.arrived == w_.barriers[op.barrier].parties) open(b);
              advance(t);
            },
            [&](const Repeat& op) {
              if (op.count == 0) {
                advance(t);
              } else {
                t.frames.push_back({&op.body, 0, op.count, seg});
              }
            },
            [&](const Spin& op) {
              if (still_spinning(t, op.barrier)) {
                t.frames.push_back({&op.body, 0, 0, seg, now_});
              } else {
                advance(t);
              }
            }},
        seg->op);
  }

  // ---- synchronization ----------------------------------------------------

  void block(ThreadRt& t, WaitKind kind, std::uint32_t object) {
    t.status = Status::kBlocked;
    t.wait = kind;
    t.wait_object = object;
  }

  // Resumes a thread that was suspended in a blocking operation. It takes
  // over the delays issued while it waited instead of paying them.
  void wake(std::uint32_t index, bool advance_pc) {
    auto& t = threads_[index];
    runtime::after_block_op(t.delay, global_);
    t.wait = WaitKind::kNone;
    t.status = Status::kReady;
    if (advance_pc) {
      advance(t);
    } else {
      t.settle_rounds = 0;
    }
  }

  void acquire(std::uint32_t index, std::uint32_t mutex, bool advance_pc) {
    auto& m = mutexes_[mutex];
    auto& t = threads_[index];
    if (!m.owner) {
      m.owner = index;
      if (t.status == Status::kBlocked) {
        wake(index, advance_pc);
      } else if (advance_pc) {
        advance(t);
      }
      return;
    }
    t.advance_on_acquire = advance_pc;
    block(t, WaitKind::kMutex, mutex);
    m.waiters.push_back(index);
  }

  void release(std::uint32_t mutex) {
    auto& m = mutexes_[mutex];
    m.owner.reset();
    if (m.waiters.empty()) return;
    auto next = m.waiters.front();
    m.waiters.pop_front();
    m.owner = next;
    wake(next, threads_[next].advance_on_acquire);
  }

  void cond_wait(std::uint32_t index, std::uint32_t cv, std::uint32_t mutex,
                 bool advance_pc) {
    auto& t = threads_[index];
    t.advance_on_acquire = advance_pc;
    release(mutex);
    block(t, WaitKind::kCond, cv);
    cond_mutex_[index] = mutex;
    cond_waiters_[cv].push_back(index);
  }

  void signal(std::uint32_t cv) {
    auto& waiters = cond_waiters_[cv];
    if (waiters.empty()) return;
    auto index = waiters.front();
    waiters.pop_front();
    acquire(index, cond_mutex_[index], threads_[index].advance_on_acquire);
  }

  // Starts the next generation of a barrier whose parties all arrived.
  void open(BarrierRt& b) {
    b.arrived = 0;
    ++b.generation;
    for (auto spinner : b.spinners) {
      auto& t = threads_[spinner];
      t.wait = WaitKind::kNone;
      t.status = Status::kReady;
    }
    b.spinners.clear();
  }

  void arrive_and_wait(std::uint32_t index, std::uint32_t barrier) {
    auto& b = barriers_[barrier];
    auto& t = threads_[index];
    if (++b.arrived < w_.barriers[barrier].parties) {
      block(t, WaitKind::kBarrier, barrier);
      b.waiters.push_back(index);
      return;
    }
    open(b);
    auto waiters = std::move(b.waiters);
    b.waiters.clear();
    for (auto waiter : waiters) wake(waiter, true);
    advance(t);
  }

  void spawn(std::uint32_t index, ThreadRt* parent) {
    auto& t = threads_[index];
    if (t.status != Status::kIdle && t.status != Status::kDone)
      throw Error("thread '" + t.stats.name + "' spawned while still running");
    const auto cpu = t.cpu;
    const auto next_sample = t.next_sample;
    auto delay = parent ? runtime::on_thread_create(parent->delay, index)
                        : runtime::ThreadDelayState{};
    delay.thread = index;
    // Delay accounting carries over from earlier runs of the same thread.
    delay.paid_units += t.delay.paid_units;
    delay.self_units += t.delay.self_units;
    delay.credited_units += t.delay.credited_units;
    delay.skipped_units += t.delay.skipped_units;
    delay.inherited_units += t.delay.inherited_units;
    t.delay = std::move(delay);
    t.cpu = cpu;
    t.next_sample = next_sample;
    t.frames.assign(1, Frame{&w_.threads[index].body, 0, 0, nullptr});
    t.status = Status::kReady;
    t.settle_rounds = 0;
    t.remaining = 0;
    t.joiners.clear();
    ++t.stats.runs;
  }

  void exit_thread(std::uint32_t index) {
    auto& t = threads_[index];
    if (settle(t)) return;
    t.status = Status::kDone;
    auto joiners = std::move(t.joiners);
    t.joiners.clear();
    for (auto j : joiners) wake(j, true);
  }

  bool entry_done() const { return threads_[w_.entry].status == Status::kDone; }

  [[noreturn]] void throw_deadlock() const {
    std::string message = "deadlock at " + format_duration(now_) + ":";
    bool first = true;
    for (const auto& t : threads_) {
      if (t.status != Status::kBlocked) continue;
      message += first ? " " : "; ";
      first = false;
      message += "'" + t.stats.name + "' blocked on ";
      switch (t.wait) {
        case WaitKind::kMutex: message += "mutex '" + w_.mutexes[t.wait_object]; break;
        case WaitKind::kCond: message += "condvar '" + w_.condvars[t.wait_object]; break;
        case WaitKind::kBarrier: message += "barrier '" + w_.barriers[t.wait_object].name; break;
        case WaitKind::kSpin: message += "spin on barrier '" + w_.barriers[t.wait_object].name; break;
        case WaitKind::kJoin: message += "join of '" + w_.threads[t.wait_object].name; break;
        case WaitKind::kNone: message += "'nothing"; break;
      }
      message += "'";
    }
    throw DeadlockError(message);
  }

  SimResult finish() {
    auto& r = result_;
    r.wall = now_;
    r.delay_size = delay_size_;
    if (p_.mode == Mode::kVirtual) {
      r.delay_count = global_.count();
      r.inserted_delay = std::min(r.delay_count * delay_size_, now_);
    }
    if (engine_) {
      r.totals = engine_->finish(now_);
      r.inserted_delay = r.totals->wall_time - r.totals->runtime;
      r.delay_count = global_.count();
    }
    const auto snapshot = progress_.snapshot(now_);
    const auto points = progress_.points();
    for (std::size_t i = 0; i < points.size(); ++i)
      r.progress[points[i].name] = snapshot.counts[i];
    for (const auto& l : snapshot.latency)
      r.latency[l.key] = {l.begins, l.ends, l.inflight_ns};
    r.direct_latency = direct_latency_;
    for (std::uint32_t id = 0; id < locations_.size(); ++id) {
      const auto& loc = locations_.location(id);
      auto it = line_stats_.find(id);
      const auto samples = lines_.total(id);
      if (it == line_stats_.end() && samples == 0) continue;
      auto& stats = r.lines[loc];
      if (it != line_stats_.end()) stats = it->second;
      stats.samples = samples;
    }
    for (const auto& [id, trips] : delay_trips_)
      r.delay_trips[locations_.location(id)] = trips;
    for (const auto& t : threads_) {
      auto stats = t.stats;
      stats.local = t.delay.local;
      stats.inherited_units = t.delay.inherited_units;
      stats.paid_units = t.delay.paid_units;
      stats.self_units = t.delay.self_units;
      stats.credited_units = t.delay.credited_units;
      stats.skipped_units = t.delay.skipped_units;
      r.threads.push_back(std::move(stats));
    }
    return std::move(r);
  }

  const Workload& w_;
  SimParams p_;

  runtime::LocationTable locations_;
  runtime::GlobalDelayState global_;
  runtime::ProgressCounters progress_;
  runtime::LineSampleCounters lines_;
  runtime::SamplingContext ctx_;
  std::unique_ptr<engine::ExperimentEngine> engine_;
  TimeNs engine_wake_ = kNever;

  std::vector<runtime::ProgressCounters::Index> progress_ids_;
  std::vector<ThreadRt> threads_;
  std::vector<MutexRt> mutexes_;
  std::vector<std::deque<std::uint32_t>> cond_waiters_;
  std::unordered_map<std::uint32_t, std::uint32_t> cond_mutex_;
  std::vector<BarrierRt> barriers_;
  std::vector<std::int64_t> counters_;
  std::unordered_map<const Segment*, std::vector<LocationId>> frames_;
  std::unordered_map<LocationId, LineStats> line_stats_;
  std::unordered_map<LocationId, std::uint64_t> delay_trips_;
  std::map<std::string, std::deque<TimeNs>> open_items_;
  std::map<std::string, DirectLatency> direct_latency_;

  LocationId target_ = kNoLocation;
  TimeNs delay_size_ = 0;
  TimeNs now_ = 0;
  SimResult result_;
};

}  // namespace

TimeNs shortened_by(TimeNs duration, SpeedupPct speedup) {
  const TimeNs v = static_cast<TimeNs>(speedup.value());
  return duration / 100 * v + (duration % 100 * v + 50) / 100;
}

SimResult simulate(const Workload& workload, const SimParams& params) {
  return Simulator(workload, params, nullptr).run();
}

SimResult profile_simulated(const Workload& workload,
                            const engine::EngineConfig& config,
                            const SimParams& params) {
  if (workload.progress.empty())
    throw DomainError("profiling needs at least one progress point");
  return Simulator(workload, params, &config).run();
}

double oracle_speedup(const Workload& workload, const SourceLocation& line,
                      SpeedupPct speedup, const std::string& progress) {
  SimParams base;
  const auto baseline = simulate(workload, base);
  auto it = baseline.progress.find(progress);
  if (it == baseline.progress.end() || it->second == 0)
    throw DomainError("progress point '" + progress +
                      "' is never visited in the baseline run");
  SimParams sped = base;
  sped.mode = Mode::kActual;
  sped.line = line;
  sped.speedup = speedup;
  const auto actual = simulate(workload, sped);
  const auto visits = actual.progress.at(progress);
  if (visits == 0) throw DomainError("progress point never visited when sped up");
  const double p0 = static_cast<double>(baseline.wall) / it->second;
  const double ps = static_cast<double>(actual.wall) / visits;
  return 100.0 * (1.0 - ps / p0);
}

}  // namespace causard::sim
