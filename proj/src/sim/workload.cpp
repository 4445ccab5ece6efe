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

#include "causard/sim/workload.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "causard/core/error.hpp"

namespace causard::sim {
namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) words.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return words;
}

std::int64_t parse_int(const std::string& text) {
  std::int64_t value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size())
    throw ParseError("malformed integer '" + text + "'");
  return value;
}

Cmp parse_cmp(const std::string& text) {
  static const std::map<std::string, Cmp, std::less<>> kOps = {
      {"<", Cmp::kLt}, {"<=", Cmp::kLe}, {">", Cmp::kGt},
      {">=", Cmp::kGe}, {"==", Cmp::kEq}, {"!=", Cmp::kNe}};
  auto it = kOps.find(text);
  if (it == kOps.end()) throw ParseError("unknown comparison '" + text + "'");
  return it->second;
}

struct RawLine {
  std::uint32_t number;
  int indent;
  std::vector<std::string> words;
};

class Parser {
 public:
  explicit Parser(std::string_view text) { split_lines(text); }

  Workload parse() {
    declare_all();
    parse_bodies();
    return std::move(workload_);
  }

  std::uint32_t current_line() const { return current_; }

 private:
  struct QueueSpec {
    std::uint32_t mutex, not_empty, not_full, counter;
    std::int64_t capacity;
  };

  void split_lines(std::string_view text) {
    std::uint32_t number = 0;
    while (!text.empty()) {
      auto nl = text.find('\n');
      std::string_view line = text.substr(0, nl);
      text = nl == std::string_view::npos ? std::string_view{}
                                          : text.substr(nl + 1);
      ++number;
      if (auto hash = line.find('#'); hash != std::string_view::npos)
        line = line.substr(0, hash);
      int indent = 0;
      std::size_t i = 0;
      for (; i < line.size() && (line[i] == ' ' || line[i] == '\t'); ++i)
        indent += line[i] == '\t' ? 4 : 1;
      auto words = split_words(line);
      if (!words.empty()) lines_.push_back({number, indent, std::move(words)});
    }
  }

  static void expect_args(const RawLine& line, std::size_t min,
                          std::size_t max) {
    std::size_t n = line.words.size() - 1;
    if (n < min || n > max)
      throw ParseError("'" + line.words[0] + "' takes " +
                       (min == max ? std::to_string(min)
                                   : std::to_string(min) + ".." +
                                         std::to_string(max)) +
                       " argument(s)");
  }

  template <class Map>
  static std::uint32_t add_name(Map& names, const std::string& name,
                                std::string_view what) {
    auto [it, inserted] =
        names.emplace(name, static_cast<std::uint32_t>(names.size()));
    if (!inserted)
      throw LoadError(std::string(what) + " '" + name + "' declared twice");
    return it->second;
  }

  static std::uint32_t lookup(const std::map<std::string, std::uint32_t>& names,
                              const std::string& name, std::string_view what) {
    auto it = names.find(name);
    if (it == names.end())
      throw LoadError("undeclared " + std::string(what) + " '" + name + "'");
    return it->second;
  }

  void declare_all() {
    std::optional<std::string> entry;
    for (const auto& line : lines_) {
      if (line.indent != 0) continue;
      current_ = line.number;
      const auto& kw = line.words[0];
      if (kw == "mutex") {
        expect_args(line, 1, 1);
        add_name(mutexes_, line.words[1], "mutex");
        workload_.mutexes.push_back(line.words[1]);
      } else if (kw == "condvar") {
        expect_args(line, 1, 1);
        add_name(condvars_, line.words[1], "condvar");
        workload_.condvars.push_back(line.words[1]);
      } else if (kw == "barrier") {
        expect_args(line, 2, 2);
        auto parties = parse_int(line.words[2]);
        if (parties < 1)
          throw LoadError("barrier '" + line.words[1] +
                          "' needs at least one party");
        add_name(barriers_, line.words[1], "barrier");
        workload_.barriers.push_back(
            {line.words[1], static_cast<std::uint32_t>(parties)});
      } else if (kw == "counter") {
        expect_args(line, 1, 2);
        add_name(counters_, line.words[1], "counter");
        workload_.counters.push_back(
            {line.words[1], line.words.size() > 2 ? parse_int(line.words[2]) : 0});
      } else if (kw == "queue") {
        expect_args(line, 1, 2);
        declare_queue(line.words[1],
                      line.words.size() > 2 ? parse_int(line.words[2]) : 0);
      } else if (kw == "entry") {
        expect_args(line, 1, 1);
        if (entry) throw LoadError("entry thread declared twice");
        entry = line.words[1];
      } else if (kw == "thread") {
        expect_args(line, 1, 1);
        auto name = line.words[1];
        if (name.size() < 2 || name.back() != ':')
          throw ParseError("expected 'thread <name>:'");
        name.pop_back();
        add_name(threads_, name, "thread");
        workload_.threads.push_back({name, {}});
      } else {
        throw ParseError("unknown declaration '" + kw + "'");
      }
    }
    current_ = 0;
    if (workload_.threads.empty()) throw LoadError("workload has no threads");
    if (entry) {
      workload_.entry = lookup(threads_, *entry, "thread");
    } else if (auto it = threads_.find("main"); it != threads_.end()) {
      workload_.entry = it->second;
    }
  }

  void declare_queue(const std::string& name, std::int64_t capacity) {
    if (capacity < 0) throw LoadError("queue capacity must be >= 0");
    QueueSpec q{};
    q.mutex = add_name(mutexes_, name, "mutex");
    workload_.mutexes.push_back(name);
    q.not_empty = add_name(condvars_, name + ".not_empty", "condvar");
    workload_.condvars.push_back(name + ".not_empty");
    q.not_full = add_name(condvars_, name + ".not_full", "condvar");
    workload_.condvars.push_back(name + ".not_full");
    q.counter = add_name(counters_, name, "counter");
    workload_.counters.push_back({name, 0});
    q.capacity = capacity;
    queues_.emplace(name, q);
  }

  std::uint32_t progress_point(ProgressPoint point) {
    auto it = progress_.find(point.name);
    if (it != progress_.end()) return it->second;
    auto index = static_cast<std::uint32_t>(workload_.progress.size());
    progress_.emplace(point.name, index);
    workload_.progress.push_back(std::move(point));
    return index;
  }

  struct Block {
    int header_indent;
    int child_indent;
    std::vector<Segment>* body;
  };

  void parse_bodies() {
    std::vector<Block> blocks;
    for (const auto& line : lines_) {
      current_ = line.number;
      if (line.indent == 0) {
        blocks.clear();
        if (line.words[0] == "thread") {
          auto name = line.words[1].substr(0, line.words[1].size() - 1);
          blocks.push_back(
              {0, -1, &workload_.threads[threads_.at(name)].body});
        }
        continue;
      }
      if (blocks.empty())
        throw ParseError("indented line outside a thread body");
      while (blocks.size() > 1 && line.indent <= blocks.back().header_indent)
        blocks.pop_back();
      auto& top = blocks.back();
      if (top.child_indent < 0) {
        top.child_indent = line.indent;
      } else if (line.indent != top.child_indent) {
        throw ParseError("inconsistent indentation");
      }
      auto* body = top.body;
      auto nested = parse_segment(line, *body);
      if (nested) blocks.push_back({line.indent, -1, nested});
    }
    current_ = 0;
  }

  TimeNs duration(const std::string& text) { return parse_duration(text); }

  // Appends the segment(s) for `line` to `body`. Returns the body of a newly
  // opened block, if any.
  std::vector<Segment>* parse_segment(const RawLine& line,
                                      std::vector<Segment>& body) {
    const auto& kw = line.words[0];
    const auto& w = line.words;
    auto push = [&](auto op) {
      body.push_back(Segment{std::move(op), line.number});
    };
    if (kw == "compute") {
      if (w.size() < 3) throw ParseError("'compute' takes <line>... <duration>");
      Compute c;
      for (std::size_t i = 1; i + 1 < w.size(); ++i)
        c.stack.push_back(parse_location(w[i]));
      c.duration = duration(w.back());
      push(std::move(c));
    } else if (kw == "delay") {
      expect_args(line, 2, 2);
      push(InsertedDelay{parse_location(w[1]), duration(w[2])});
    } else if (kw == "lock") {
      expect_args(line, 1, 1);
      push(Lock{lookup(mutexes_, w[1], "mutex")});
    } else if (kw == "unlock") {
      expect_args(line, 1, 1);
      push(Unlock{lookup(mutexes_, w[1], "mutex")});
    } else if (kw == "barrier") {
      expect_args(line, 1, 1);
      push(BarrierWait{lookup(barriers_, w[1], "barrier")});
    } else if (kw == "condwait" || kw == "wait") {
      expect_args(line, 2, 2);
      push(CondWait{lookup(condvars_, w[1], "condvar"),
                    lookup(mutexes_, w[2], "mutex")});
    } else if (kw == "signal") {
      expect_args(line, 1, 1);
      push(CondSignal{lookup(condvars_, w[1], "condvar")});
    } else if (kw == "broadcast") {
      expect_args(line, 1, 1);
      push(CondBroadcast{lookup(condvars_, w[1], "condvar")});
    } else if (kw == "spawn") {
      expect_args(line, 1, 1);
      push(Spawn{lookup(threads_, w[1], "thread")});
    } else if (kw == "join") {
      expect_args(line, 1, 1);
      push(Join{lookup(threads_, w[1], "thread")});
    } else if (kw == "progress") {
      expect_args(line, 1, 1);
      auto index = progress_point(ProgressPoint::source(w[1]));
      if (workload_.progress[index].kind != ProgressKind::kSource)
        throw LoadError("progress point '" + w[1] + "' reused with another kind");
      push(Progress{index});
    } else if (kw == "begin") {
      expect_args(line, 1, 1);
      push(LatencyBegin{progress_point(ProgressPoint::latency_begin(w[1]))});
    } else if (kw == "end") {
      expect_args(line, 1, 1);
      push(LatencyEnd{progress_point(ProgressPoint::latency_end(w[1]))});
    } else if (kw == "add") {
      expect_args(line, 2, 2);
      push(Add{lookup(counters_, w[1], "counter"), parse_int(w[2])});
    } else if (kw == "waitfor") {
      expect_args(line, 5, 5);
      push(WaitFor{lookup(condvars_, w[1], "condvar"),
                   lookup(mutexes_, w[2], "mutex"),
                   lookup(counters_, w[3], "counter"), parse_cmp(w[4]),
                   parse_int(w[5])});
    } else if (kw == "put" || kw == "take") {
      expect_args(line, 1, 1);
      auto it = queues_.find(w[1]);
      if (it == queues_.end())
        throw LoadError("undeclared queue '" + w[1] + "'");
      const auto& q = it->second;
      push(Lock{q.mutex});
      if (kw == "put") {
        if (q.capacity > 0)
          push(WaitFor{q.not_full, q.mutex, q.counter, Cmp::kLt, q.capacity});
        push(Add{q.counter, 1});
        push(CondSignal{q.not_empty});
      } else {
        push(WaitFor{q.not_empty, q.mutex, q.counter, Cmp::kGt, 0});
        push(Add{q.counter, -1});
        push(CondSignal{q.not_full});
      }
      push(Unlock{q.mutex});
    } else if (kw == "arrive") {
      expect_args(line, 1, 1);
      push(Arrive{lookup(barriers_, w[1], "barrier")});
    } else if (kw == "repeat") {
      expect_args(line, 1, 1);
      auto count = parse_int(w[1]);
      if (count < 0) throw LoadError("repeat count must be >= 0");
      push(Repeat{static_cast<std::uint64_t>(count), {}});
      return &std::get<Repeat>(body.back().op).body;
    } else if (kw == "spin") {
      expect_args(line, 1, 1);
      push(Spin{lookup(barriers_, w[1], "barrier"), {}});
      return &std::get<Spin>(body.back().op).body;
    } else {
      throw ParseError("unknown segment '" + kw + "'");
    }
    return nullptr;
  }

  std::vector<RawLine> lines_;
  std::uint32_t current_ = 0;
  Workload workload_;
  std::map<std::string, std::uint32_t> mutexes_, condvars_, barriers_,
      counters_, threads_, progress_;
  std::map<std::string, QueueSpec> queues_;
};

template <class Fn>
void walk(const std::vector<Segment>& body, Fn&& fn) {
  for (const auto& seg : body) {
    fn(seg);
    if (auto* r = std::get_if<Repeat>(&seg.op)) walk(r->body, fn);
    if (auto* s = std::get_if<Spin>(&seg.op)) walk(s->body, fn);
  }
}

LoadError located(std::uint32_t line, const std::string& message) {
  return LoadError("line " + std::to_string(line) + ": " + message);
}

// Statically follows the set of held mutexes through a body.
class LockChecker {
 public:
  explicit LockChecker(const Workload& w) : w_(w) {}

  void check_body(const std::vector<Segment>& body, std::vector<std::uint32_t>& held) {
    for (const auto& seg : body) {
      std::visit(
          Overloaded{
              [&](const Lock& op) {
                for (auto m : held)
                  if (m == op.mutex)
                    throw located(seg.source_line,
                                  "mutex '" + w_.mutexes[m] + "' locked twice");
                held.push_back(op.mutex);
              },
              [&](const Unlock& op) {
                if (held.empty() || held.back() != op.mutex)
                  throw located(seg.source_line,
                                "unlock of '" + w_.mutexes[op.mutex] +
                                    "' is not properly nested");
                held.pop_back();
              },
              [&](const CondWait& op) { require_held(seg, op.mutex, held); },
              [&](const WaitFor& op) { require_held(seg, op.mutex, held); },
              [&](const Repeat& op) { check_block(seg, op.body, held); },
              [&](const Spin& op) { check_block(seg, op.body, held); },
              [](const auto&) {}},
          seg.op);
    }
  }

 private:
  void require_held(const Segment& seg, std::uint32_t m,
                    const std::vector<std::uint32_t>& held) {
    for (auto h : held)
      if (h == m) return;
    throw located(seg.source_line,
                  "waits on mutex '" + w_.mutexes[m] + "' without holding it");
  }

  void check_block(const Segment& seg, const std::vector<Segment>& body,
                   std::vector<std::uint32_t>& held) {
    auto before = held;
    check_body(body, held);
    if (held != before)
      throw located(seg.source_line, "block body does not release its locks");
  }

  const Workload& w_;
};

bool has_timed_compute(const std::vector<Segment>& body) {
  bool found = false;
  walk(body, [&](const Segment& seg) {
    if (auto* c = std::get_if<Compute>(&seg.op); c && c->duration > 0)
      found = true;
    if (auto* d = std::get_if<InsertedDelay>(&seg.op); d && d->duration > 0)
      found = true;
  });
  return found;
}

std::vector<Segment> insert_delay(const std::vector<Segment>& body,
                                  const SourceLocation& line, TimeNs delay) {
  std::vector<Segment> out;
  for (const auto& seg : body) {
    out.push_back(seg);
    auto& copy = out.back();
    if (auto* r = std::get_if<Repeat>(&copy.op)) {
      r->body = insert_delay(r->body, line, delay);
    } else if (auto* s = std::get_if<Spin>(&copy.op)) {
      s->body = insert_delay(s->body, line, delay);
    } else if (auto* c = std::get_if<Compute>(&copy.op); c && c->line() == line) {
      out.push_back(Segment{InsertedDelay{line, delay}, seg.source_line});
    }
  }
  return out;
}

}  // namespace

bool compare(std::int64_t lhs, Cmp cmp, std::int64_t rhs) {
  switch (cmp) {
    case Cmp::kLt: return lhs < rhs;
    case Cmp::kLe: return lhs <= rhs;
    case Cmp::kGt: return lhs > rhs;
    case Cmp::kGe: return lhs >= rhs;
    case Cmp::kEq: return lhs == rhs;
    case Cmp::kNe: return lhs != rhs;
  }
  return false;
}

std::optional<std::uint32_t> Workload::thread_index(std::string_view name) const {
  for (std::uint32_t i = 0; i < threads.size(); ++i)
    if (threads[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::uint32_t> Workload::progress_index(std::string_view name) const {
  for (std::uint32_t i = 0; i < progress.size(); ++i)
    if (progress[i].name == name) return i;
  return std::nullopt;
}

std::vector<SourceLocation> Workload::lines() const {
  std::vector<SourceLocation> out;
  std::set<SourceLocation> seen;
  for (const auto& t : threads)
    walk(t.body, [&](const Segment& seg) {
      if (auto* c = std::get_if<Compute>(&seg.op))
        if (seen.insert(c->line()).second) out.push_back(c->line());
    });
  return out;
}

bool Workload::has_line(const SourceLocation& line) const {
  for (const auto& l : lines())
    if (l == line) return true;
  return false;
}

void Workload::validate() const {
  if (threads.empty()) throw LoadError("workload has no threads");
  if (entry >= threads.size()) throw LoadError("entry thread out of range");
  for (const auto& b : barriers)
    if (b.parties < 1)
      throw LoadError("barrier '" + b.name + "' needs at least one party");

  std::vector<bool> spawned(threads.size(), false);
  for (std::uint32_t t = 0; t < threads.size(); ++t) {
    std::vector<std::uint32_t> held;
    LockChecker(*this).check_body(threads[t].body, held);
    if (!held.empty())
      throw LoadError("thread '" + threads[t].name + "' exits holding mutex '" +
                      mutexes[held.back()] + "'");
    walk(threads[t].body, [&](const Segment& seg) {
      auto check_index = [&](std::size_t i, std::size_t n) {
        if (i >= n) throw located(seg.source_line, "object index out of range");
      };
      std::visit(
          Overloaded{
              [&](const Spawn& op) {
                check_index(op.thread, threads.size());
                if (op.thread == t || op.thread == entry)
                  throw located(seg.source_line,
                                "thread '" + threads[op.thread].name +
                                    "' cannot be spawned here");
                spawned[op.thread] = true;
              },
              [&](const Join& op) {
                check_index(op.thread, threads.size());
                if (op.thread == t)
                  throw located(seg.source_line, "thread joins itself");
              },
              [&](const Compute& op) {
                if (op.stack.empty())
                  throw located(seg.source_line, "compute without a line");
              },
              [&](const Lock& op) { check_index(op.mutex, mutexes.size()); },
              [&](const Unlock& op) { check_index(op.mutex, mutexes.size()); },
              [&](const BarrierWait& op) {
                check_index(op.barrier, barriers.size());
              },
              [&](const Arrive& op) { check_index(op.barrier, barriers.size()); },
              [&](const CondWait& op) {
                check_index(op.cv, condvars.size());
                check_index(op.mutex, mutexes.size());
              },
              [&](const CondSignal& op) { check_index(op.cv, condvars.size()); },
              [&](const CondBroadcast& op) {
                check_index(op.cv, condvars.size());
              },
              [&](const Progress& op) { check_index(op.point, progress.size()); },
              [&](const LatencyBegin& op) {
                check_index(op.point, progress.size());
              },
              [&](const LatencyEnd& op) { check_index(op.point, progress.size()); },
              [&](const Add& op) { check_index(op.counter, counters.size()); },
              [&](const WaitFor& op) {
                check_index(op.cv, condvars.size());
                check_index(op.mutex, mutexes.size());
                check_index(op.counter, counters.size());
              },
              [&](const Repeat& op) {
                if (op.body.empty())
                  throw located(seg.source_line, "empty repeat block");
              },
              [&](const Spin& op) {
                check_index(op.barrier, barriers.size());
                if (!has_timed_compute(op.body))
                  throw located(seg.source_line,
                                "spin block needs a compute with nonzero duration");
              },
              [](const InsertedDelay&) {}},
          seg.op);
    });
  }
  for (std::uint32_t t = 0; t < threads.size(); ++t) {
    walk(threads[t].body, [&](const Segment& seg) {
      if (auto* j = std::get_if<Join>(&seg.op); j && !spawned[j->thread])
        throw located(seg.source_line, "thread '" + threads[j->thread].name +
                                           "' is joined but never spawned");
    });
    if (t != entry && !spawned[t])
      throw LoadError("thread '" + threads[t].name + "' is never spawned");
  }
  try {
    validate_progress_points(progress);
  } catch (const ParseError& e) {
    throw LoadError(e.what());
  }
}

Workload load_workload(std::string_view text, std::string_view origin) {
  Parser parser(text);
  try {
    Workload w = parser.parse();
    w.validate();
    return w;
  } catch (const Error& e) {
    std::string prefix(origin);
    if (parser.current_line() != 0)
      prefix += ":" + std::to_string(parser.current_line());
    throw LoadError(prefix + ": " + e.what());
  }
}

Workload load_workload_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open workload file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_workload(buffer.str(), path);
}

Workload with_inserted_delay(const Workload& workload,
                             const SourceLocation& line, TimeNs delay) {
  Workload out = workload;
  for (auto& t : out.threads) t.body = insert_delay(t.body, line, delay);
  return out;
}

}  // namespace causard::sim
