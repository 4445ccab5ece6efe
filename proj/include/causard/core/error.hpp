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

#include <stdexcept>
#include <string>

namespace causard {

/// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed textual input (locations, durations, workload files, flags).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A workload that parsed but violates a structural rule.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// The simulator reached a state with blocked threads and nothing runnable.
class DeadlockError : public Error {
 public:
  using Error::Error;
};

/// Profile files that cannot be read, or use an unsupported format version.
class ProfileFormatError : public Error {
 public:
  using Error::Error;
};

/// Arithmetic that has no defined answer for the given inputs.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A queue whose departures fall behind its arrivals, so no steady-state
/// latency exists.
class InstabilityError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Bad command-line flags or an unknown output format.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace causard
