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

// Instrumentation and synchronization wrappers for live profiling.
//
//   void work() {
//     CAUSARD_LINE();            // code below is attributed to this line
//     ...
//     CAUSARD_PROGRESS("item");  // one unit of useful work done
//   }
//
// Blocking and waking go through Mutex, CondVar, Barrier and Thread so that
// delays are paid before waking other threads and forgiven after blocking.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string_view>
#include <thread>
#include <utility>

#include "causard/live/session.hpp"

namespace causard::live {

/// A static call site. The cached id is tagged with the session generation.
struct Site {
  const char* file;
  std::uint32_t line;
  std::atomic<std::uint64_t> cached{0};
};

/// A static progress point.
struct Point {
  const char* name;
  ProgressKind kind = ProgressKind::kSource;
  std::atomic<std::uint64_t> cached{0};
};

void enter(Site& site);
void leave();

/// Attributes the rest of the enclosing scope to a source line.
class Region {
 public:
  explicit Region(Site& site) { enter(site); }
  ~Region() { leave(); }
  Region(const Region&) = delete;
  Region& operator=(const Region&) = delete;
};

void visit(Point& point);
void progress(std::string_view name);
void latency_begin(std::string_view key);
void latency_end(std::string_view key);

/// Processes queued samples and pays outstanding delays. Called by every
/// wrapper; a long-running loop without markers can call it too.
void safe_point();

namespace detail {
bool active();
void settle();
void credit();
}  // namespace detail

class Mutex {
 public:
  void lock() {
    detail::settle();
    if (mu_.try_lock()) return;
    mu_.lock();
    detail::credit();
  }
  bool try_lock() { return mu_.try_lock(); }
  void unlock() {
    detail::settle();
    mu_.unlock();
  }
  std::mutex& native() { return mu_; }

 private:
  std::mutex mu_;
};

class CondVar {
 public:
  void wait(std::unique_lock<Mutex>& lock) {
    detail::settle();
    std::unique_lock<std::mutex> inner(lock.mutex()->native(), std::adopt_lock);
    cv_.wait(inner);
    inner.release();
    detail::credit();
  }
  template <class Pred>
  void wait(std::unique_lock<Mutex>& lock, Pred pred) {
    while (!pred()) wait(lock);
  }
  void notify_one() {
    detail::settle();
    cv_.notify_one();
  }
  void notify_all() {
    detail::settle();
    cv_.notify_all();
  }

 private:
  std::condition_variable cv_;
};

class Barrier {
 public:
  explicit Barrier(std::uint32_t parties) : parties_(parties) {}
  void arrive_and_wait();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::uint32_t parties_;
  std::uint32_t waiting_ = 0;
  std::uint64_t generation_ = 0;
};

/// A thread that inherits its creator's delay count and settles on exit.
class Thread {
 public:
  Thread() = default;
  template <class F, class... Args>
  explicit Thread(F&& f, Args&&... args) {
    launch([fn = std::forward<F>(f),
            ... a = std::forward<Args>(args)]() mutable { std::invoke(fn, a...); });
  }
  Thread(Thread&&) = default;
  Thread& operator=(Thread&&) = default;
  ~Thread();

  bool joinable() const { return thread_.joinable(); }
  void join();

 private:
  void launch(std::function<void()> body);

  std::thread thread_;
  std::shared_ptr<std::atomic<bool>> done_;
};

}  // namespace causard::live

#define CAUSARD_CONCAT_INNER(a, b) a##b
#define CAUSARD_CONCAT(a, b) CAUSARD_CONCAT_INNER(a, b)

#define CAUSARD_LINE()                                                       \
  static ::causard::live::Site CAUSARD_CONCAT(causard_site_, __LINE__){      \
      __FILE__, static_cast<std::uint32_t>(__LINE__)};                       \
  ::causard::live::Region CAUSARD_CONCAT(causard_region_, __LINE__) {        \
    CAUSARD_CONCAT(causard_site_, __LINE__)                                  \
  }

#define CAUSARD_PROGRESS(name)                                               \
  do {                                                                       \
    static ::causard::live::Point causard_point{name};                       \
    ::causard::live::visit(causard_point);                                   \
  } while (0)

#define CAUSARD_BEGIN(key) ::causard::live::latency_begin(key)
#define CAUSARD_END(key) ::causard::live::latency_end(key)
