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

#include "causard/runtime/delay.hpp"

namespace causard::live::detail {

/// Delay state handed from a creating thread to its child.
struct Inheritance {
  std::uint64_t generation = 0;
  runtime::ThreadDelayState state;
};

Inheritance fork_state();
void adopt(const Inheritance& from);
/// Settles (exiting wakes joiners) and retires the calling thread.
void exit_thread();

}  // namespace causard::live::detail
