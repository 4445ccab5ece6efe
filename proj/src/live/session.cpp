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


#include "causard/live/session.hpp"

#include <pthread.h>
#include <time.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <boost/lockfree/spsc_queue.hpp>

#include "causard/analysis/profile_io.hpp"
#include "causard/core/error.hpp"
#include "causard/live/causard.hpp"
#include "internal.hpp"

namespace causard::live {

using runtime::kMaxFrames;
using runtime::kNoLocation;
using runtime::LocationId;
using runtime::Sample;

namespace {

TimeNs monotonic() {
  timespec ts{};
  clock_gettime(CLOCK_MONOTONIC, &ts);
  return static_cast<TimeNs>(ts.tv_sec) * kSecond +
         static_cast<TimeNs>(ts.tv_nsec);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string env(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

std::uint64_t env_count(const char* name, std::uint64_t fallback) {
  const auto text = env(name);
  if (text.empty()) return fallback;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(std::string(name) + ": expected a non-negative integer, got '" +
                   text + "'");
}

TimeNs env_duration(const char* name, TimeNs fallback) {
  const auto text = env(name);
  return text.empty() ? fallback : parse_duration(text);
}

// The marker stack of one thread plus its sample queue. The owner pushes and
// pops frames; the sampler reads them under a sequence lock.
struct ThreadCtx {
  std::uint64_t generation = 0;
  runtime::ThreadDelayState delay;
  clockid_t clock{};

  std::atomic<std::uint32_t> seq{0};
  std::atomic<std::uint32_t> depth{0};
  // Ring indexed by depth, so the innermost kMaxFrames frames survive.
  std::array<std::atomic<LocationId>, kMaxFrames> frames{};

  boost::lockfree::spsc_queue<Sample, boost::lockfree::capacity<128>> queue;
  TimeNs next_cpu = 0;  // sampler only
  std::atomic<std::uint64_t> samples{0};

  void push(LocationId id) {
    const auto d = depth.load(std::memory_order_relaxed);
    const auto s = seq.load(std::memory_order_relaxed);
    seq.store(s + 1, std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_release);
    frames[d % kMaxFrames].store(id, std::memory_order_relaxed);
    depth.store(d + 1, std::memory_order_relaxed);
    seq.store(s + 2, std::memory_order_release);
  }

  void pop() {
    const auto d = depth.load(std::memory_order_relaxed);
    if (d == 0) return;
    const auto s = seq.load(std::memory_order_relaxed);
    seq.store(s + 1, std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_release);
    depth.store(d - 1, std::memory_order_relaxed);
    seq.store(s + 2, std::memory_order_release);
  }

  // Innermost first. Returns false if the owner kept changing the stack.
  bool read_stack(std::array<LocationId, kMaxFrames>& out, std::size_t& n) const {
    for (int attempt = 0; attempt < 4; ++attempt) {
      const auto s1 = seq.load(std::memory_order_acquire);
      if (s1 & 1u) continue;
      const auto d = depth.load(std::memory_order_relaxed);
      n = std::min<std::size_t>(d, kMaxFrames);
      for (std::size_t k = 0; k < n; ++k) {
        out[k] = frames[(d - 1 - k) % kMaxFrames].load(std::memory_order_relaxed);
      }
      std::atomic_thread_fence(std::memory_order_acquire);
      if (seq.load(std::memory_order_relaxed) == s1) return true;
    }
    return false;
  }
};

class Session {
 public:
  Session(const SessionOptions& options, std::uint64_t generation)
      : options_(options),
        generation_(generation),
        origin_(monotonic()),
        locations_(options.scope),
        lines_(locations_.capacity()) {
    options_.config.validate();
    for (const auto& name : options_.progress) {
      progress_.register_point(ProgressPoint::source(name));
    }
    writer_.emplace(options_.out);
    engine_ = std::make_unique<engine::ExperimentEngine>(
        options_.config,
        engine::RuntimeHandles{locations_, global_, progress_, lines_},
        [this](const engine::ExperimentRecord& r) { writer_->write(r); });
    engine_->start(now());
    sampler_ = std::thread([this] { sample_loop(); });
    if (options_.mode == Mode::kProfile) {
      driver_ = std::thread([this] { drive_loop(); });
    }
  }

  std::uint64_t generation() const { return generation_; }
  Mode mode() const { return options_.mode; }
  TimeNs now() const { return monotonic() - origin_; }
  runtime::LocationTable& locations() { return locations_; }
  runtime::ProgressCounters& progress() { return progress_; }

  runtime::SamplingContext context() {
    return {locations_, global_, &lines_, &progress_};
  }

  std::uint32_t next_thread() { return next_thread_.fetch_add(1); }

  std::shared_ptr<ThreadCtx> attach(runtime::ThreadDelayState state) {
    auto ctx = std::make_shared<ThreadCtx>();
    ctx->generation = generation_;
    ctx->delay = std::move(state);
    pthread_getcpuclockid(pthread_self(), &ctx->clock);
    std::lock_guard lock(registry_mu_);
    threads_.push_back(ctx);
    return ctx;
  }

  void retire(const std::shared_ptr<ThreadCtx>& ctx) {
    std::lock_guard lock(registry_mu_);
    auto it = std::find(threads_.begin(), threads_.end(), ctx);
    if (it == threads_.end()) return;
    threads_.erase(it);
    reports_.push_back(report_of(*ctx));
  }

  // Drains the sampler queue and processes a full batch.
  void poll(ThreadCtx& ctx) {
    drain(ctx);
    if (ctx.delay.pending.size() < options_.config.sampling.batch_size) return;
    auto c = context();
    const auto owed = runtime::process_thread_samples(ctx.delay, c, ctx.delay.pending);
    ctx.delay.pending.clear();
    runtime::execute_pause(ctx.delay, owed, sleeper_);
  }

  void settle(ThreadCtx& ctx) {
    drain(ctx);
    auto c = context();
    runtime::before_wake_op(ctx.delay, c, sleeper_);
  }

  void credit(ThreadCtx& ctx) { runtime::after_block_op(ctx.delay, global_); }

  engine::RunTotals stop() {
    {
      std::lock_guard lock(stop_mu_);
      stopping_ = true;
    }
    stop_cv_.notify_all();
    sampler_.join();
    if (driver_.joinable()) driver_.join();
    auto totals = engine_->finish(now());

    analysis::ProfileMeta meta;
    meta.source = "live";
    meta.seed = options_.config.seed;
    meta.config = options_.config;
    meta.scope = options_.scope.patterns();
    writer_->finish(totals, meta);
    writer_.reset();

    std::lock_guard lock(registry_mu_);
    for (const auto& ctx : threads_) reports_.push_back(report_of(*ctx));
    threads_.clear();
    return totals;
  }

  std::vector<ThreadReport> reports() {
    std::lock_guard lock(registry_mu_);
    return reports_;
  }

 private:
  static ThreadReport report_of(const ThreadCtx& ctx) {
    return {ctx.delay.thread, ctx.samples.load(), ctx.delay.total_obligation,
            ctx.delay.total_slept, ctx.delay.excess_sleep};
  }

  static void drain(ThreadCtx& ctx) {
    ctx.queue.consume_all([&](const Sample& s) { ctx.delay.pending.push_back(s); });
  }

  void sample_loop() {
    const auto period = options_.config.sampling.period;
    const auto tick = std::chrono::nanoseconds(std::max<TimeNs>(period / 2, 50 * kMicrosecond));
    std::vector<std::shared_ptr<ThreadCtx>> snapshot;
    std::unique_lock lock(stop_mu_);
    while (!stop_cv_.wait_for(lock, tick, [this] { return stopping_; })) {
      lock.unlock();
      {
        std::lock_guard reg(registry_mu_);
        snapshot = threads_;
      }
      for (const auto& ctx : snapshot) sample(*ctx, period);
      snapshot.clear();
      lock.lock();
    }
  }

  void sample(ThreadCtx& ctx, TimeNs period) {
    timespec ts{};
    if (clock_gettime(ctx.clock, &ts) != 0) return;
    const auto cpu = static_cast<TimeNs>(ts.tv_sec) * kSecond +
                     static_cast<TimeNs>(ts.tv_nsec);
    if (ctx.next_cpu == 0) {
      ctx.next_cpu = cpu + period;
      return;
    }
    std::array<LocationId, kMaxFrames> frames{};
    std::size_t n = 0;
    // A starved sampler catches up by a few periods at most.
    for (int k = 0; k < 4 && cpu >= ctx.next_cpu; ++k) {
      ctx.next_cpu += period;
      if (!ctx.read_stack(frames, n) || n == 0) continue;
      const auto s = Sample::of(ctx.delay.thread, now(), {frames.data(), n});
      if (ctx.queue.push(s)) ctx.samples.fetch_add(1, std::memory_order_relaxed);
    }
    if (cpu >= ctx.next_cpu) ctx.next_cpu = cpu + period;
  }

  void drive_loop() {
    const auto period = options_.config.sampling.period;
    std::unique_lock lock(stop_mu_);
    while (!stopping_) {
      lock.unlock();
      const auto t = now();
      const auto wake = std::min(engine_->step(t), t + period);
      lock.lock();
      const auto after = now();
      if (wake > after) {
        stop_cv_.wait_for(lock, std::chrono::nanoseconds(wake - after),
                          [this] { return stopping_; });
      }
    }
  }

  SessionOptions options_;
  std::uint64_t generation_;
  TimeNs origin_;

  runtime::LocationTable locations_;
  runtime::GlobalDelayState global_;
  runtime::ProgressCounters progress_;
  runtime::LineSampleCounters lines_;
  runtime::RealSleeper sleeper_;
  std::optional<analysis::ProfileWriter> writer_;
  std::unique_ptr<engine::ExperimentEngine> engine_;

  std::mutex registry_mu_;
  std::vector<std::shared_ptr<ThreadCtx>> threads_;
  std::vector<ThreadReport> reports_;
  std::atomic<std::uint32_t> next_thread_{0};

  std::mutex stop_mu_;
  std::condition_variable stop_cv_;
  bool stopping_ = false;
  std::thread sampler_;
  std::thread driver_;
};

std::mutex g_control;
// Sessions are never freed: a straggling thread may still hold a pointer.
std::atomic<Session*> g_session{nullptr};
Session* g_last = nullptr;
std::uint64_t g_generation = 0;
std::once_flag g_env_once;
bool g_atexit = false;

Session* session() {
  if (auto* s = g_session.load(std::memory_order_acquire)) return s;
  std::call_once(g_env_once, [] {
    if (g_session.load() != nullptr) return;
    try {
      const auto options = options_from_env();
      if (options.mode != Mode::kOff) start(options);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "causard: profiling disabled: %s\n", e.what());
    }
  });
  return g_session.load(std::memory_order_acquire);
}

// The calling thread's context; retires itself when the thread ends.
struct Holder {
  std::shared_ptr<ThreadCtx> ctx;
  Session* owner = nullptr;
  ~Holder() {
    if (ctx && owner == g_session.load()) detail::exit_thread();
  }
};
thread_local Holder t_holder;

ThreadCtx* bind(Session& s, std::optional<runtime::ThreadDelayState> inherited = {}) {
  if (t_holder.ctx && t_holder.owner == &s) return t_holder.ctx.get();
  runtime::ThreadDelayState state;
  if (inherited) {
    state = std::move(*inherited);
  } else {
    state.thread = s.next_thread();
  }
  t_holder.ctx = s.attach(std::move(state));
  t_holder.owner = &s;
  return t_holder.ctx.get();
}

LocationId site_id(Session& s, Site& site) {
  const auto cached = site.cached.load(std::memory_order_acquire);
  if ((cached >> 32) == s.generation()) return static_cast<LocationId>(cached);
  const auto id = s.locations().intern({site.file, site.line});
  site.cached.store(s.generation() << 32 | id, std::memory_order_release);
  return id;
}

}  // namespace

SessionOptions options_from_env() {
  SessionOptions o;
  const auto mode = env("CAUSARD_MODE");
  if (mode.empty() || mode == "off") {
    o.mode = Mode::kOff;
  } else if (mode == "sample") {
    o.mode = Mode::kSample;
  } else if (mode == "profile") {
    o.mode = Mode::kProfile;
  } else {
    throw UsageError("CAUSARD_MODE must be profile, sample or off, got '" + mode + "'");
  }
  if (auto out = env("CAUSARD_OUT"); !out.empty()) o.out = out;

  auto& c = o.config;
  c.seed = env_count("CAUSARD_SEED", c.seed);
  c.sampling.period = env_duration("CAUSARD_PERIOD", c.sampling.period);
  c.sampling.batch_size = static_cast<std::uint32_t>(
      env_count("CAUSARD_BATCH", c.sampling.batch_size));
  c.experiment_duration = env_duration("CAUSARD_EXPERIMENT", c.experiment_duration);
  c.cooloff = env_duration("CAUSARD_COOLOFF", c.cooloff);
  c.min_visits = env_count("CAUSARD_MIN_VISITS", c.min_visits);
  if (auto line = env("CAUSARD_FIXED_LINE"); !line.empty()) {
    c.fixed_line = parse_location(line);
  }
  if (auto pct = env("CAUSARD_FIXED_SPEEDUP"); !pct.empty()) {
    c.fixed_speedup = SpeedupPct(static_cast<int>(env_count("CAUSARD_FIXED_SPEEDUP", 0)));
  }
  c.validate();

  if (auto scope = split_list(env("CAUSARD_SCOPE")); !scope.empty()) {
    o.scope = Scope(std::move(scope));
  }
  o.progress = split_list(env("CAUSARD_PROGRESS"));
  return o;
}

void start(const SessionOptions& options) {
  std::lock_guard lock(g_control);
  if (g_session.load() != nullptr) throw Error("a profiling session is already running");
  if (options.mode == Mode::kOff) return;
  auto* s = new Session(options, ++g_generation);
  g_last = s;
  g_session.store(s, std::memory_order_release);
  if (!g_atexit) {
    g_atexit = true;
    std::atexit([] { shutdown(); });
  }
}

engine::RunTotals shutdown() {
  std::lock_guard lock(g_control);
  auto* s = g_session.load();
  if (s == nullptr) return {};
  // The caller's own context is settled so its reported accounting is final.
  if (t_holder.ctx && t_holder.owner == s) s->settle(*t_holder.ctx);
  g_session.store(nullptr, std::memory_order_release);
  return s->stop();
}

Mode mode() {
  auto* s = session();
  return s ? s->mode() : Mode::kOff;
}

void retire_thread() { detail::exit_thread(); }

std::vector<ThreadReport> thread_reports() {
  std::lock_guard lock(g_control);
  return g_last ? g_last->reports() : std::vector<ThreadReport>{};
}

void enter(Site& site) {
  auto* s = session();
  if (!s) return;
  auto* ctx = bind(*s);
  ctx->push(site_id(*s, site));
  s->poll(*ctx);
}

void leave() {
  auto* s = session();
  if (!s) return;
  auto* ctx = bind(*s);
  ctx->pop();
  s->poll(*ctx);
}

void visit(Point& point) {
  auto* s = session();
  if (!s) return;
  auto cached = point.cached.load(std::memory_order_acquire);
  if ((cached >> 32) != s->generation()) {
    ProgressPoint p{point.name, point.kind, {}, {}};
    const auto index = s->progress().register_point(p);
    cached = s->generation() << 32 | index;
    point.cached.store(cached, std::memory_order_release);
  }
  s->progress().visit(static_cast<std::uint32_t>(cached), s->now());
  s->poll(*bind(*s));
}

void progress(std::string_view name) {
  auto* s = session();
  if (!s) return;
  const auto index = s->progress().register_point(ProgressPoint::source(std::string(name)));
  s->progress().visit(index, s->now());
  s->poll(*bind(*s));
}

void latency_begin(std::string_view key) {
  auto* s = session();
  if (!s) return;
  const auto index =
      s->progress().register_point(ProgressPoint::latency_begin(std::string(key)));
  s->progress().visit(index, s->now());
}

void latency_end(std::string_view key) {
  auto* s = session();
  if (!s) return;
  const auto index =
      s->progress().register_point(ProgressPoint::latency_end(std::string(key)));
  s->progress().visit(index, s->now());
}

void safe_point() {
  if (auto* s = session()) s->poll(*bind(*s));
}

namespace detail {

bool active() { return session() != nullptr; }

void settle() {
  if (auto* s = session()) s->settle(*bind(*s));
}

void credit() {
  if (auto* s = session()) s->credit(*bind(*s));
}

Inheritance fork_state() {
  auto* s = session();
  if (!s) return {};
  auto* parent = bind(*s);
  return {s->generation(), runtime::on_thread_create(parent->delay, s->next_thread())};
}

void adopt(const Inheritance& from) {
  auto* s = session();
  if (!s || s->generation() != from.generation) return;
  bind(*s, from.state);
}

void exit_thread() {
  auto* s = g_session.load(std::memory_order_acquire);
  if (!s || !t_holder.ctx || t_holder.owner != s) return;
  auto ctx = std::move(t_holder.ctx);
  t_holder.owner = nullptr;
  s->settle(*ctx);
  s->retire(ctx);
}

}  // namespace detail

}  // namespace causard::live
