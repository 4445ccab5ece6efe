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


#include "causard/live/causard.hpp"
#include "internal.hpp"

namespace causard::live {

void Barrier::arrive_and_wait() {
  detail::settle();
  std::unique_lock lock(mu_);
  const auto generation = generation_;
  if (++waiting_ == parties_) {
    // The last arriver opens the barrier without blocking, so no credit.
    waiting_ = 0;
    ++generation_;
    cv_.notify_all();
    return;
  }
  cv_.wait(lock, [&] { return generation_ != generation; });
  lock.unlock();
  detail::credit();
}

void Thread::launch(std::function<void()> body) {
  done_ = std::make_shared<std::atomic<bool>>(false);
  thread_ = std::thread([inherited = detail::fork_state(), body = std::move(body),
                         done = done_]() mutable {
    detail::adopt(inherited);
    body();
    detail::exit_thread();
    done->store(true, std::memory_order_release);
  });
}

void Thread::join() {
  detail::settle();
  const bool finished = done_ && done_->load(std::memory_order_acquire);
  thread_.join();
  if (!finished) detail::credit();
}

Thread::~Thread() {
  if (joinable()) join();
}

}  // namespace causard::live
