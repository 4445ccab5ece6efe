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

// causard: causal profiler front end.
//
//   causard run [flags] -- ./program args...
//   causard simulate workload.wl [--oracle file:line pct] [flags]
//   causard report profile.causard... [--format text|json|csv|svg]
//   causard accuracy workload.wl --line file:line --delay 50us

#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "causard/analysis/profile_io.hpp"
#include "causard/analysis/report.hpp"
#include "causard/core/error.hpp"
#include "causard/core/types.hpp"
#include "causard/sim/protocols.hpp"
#include "causard/sim/simulator.hpp"
#include "causard/sim/workload.hpp"

namespace {

using namespace causard;

enum ExitCode { kOk = 0, kUsage = 1, kFailure = 2, kDeadlock = 3 };

// Flags shared by every subcommand, kept as text until validated.
struct CommonFlags {
  std::vector<std::string> scope;
  std::vector<std::string> progress;
  std::uint64_t seed = 0;
  std::string period = "1ms";
  std::uint32_t batch = 10;
  std::string experiment = "500ms";
  std::string cooloff = "10ms";
  std::uint64_t min_visits = 5;
  std::string fixed_line;
  std::optional<int> fixed_speedup;
  std::string out;
  std::string format = "text";
  std::string jitter = "0ns";
};

void add_common(CLI::App& app, CommonFlags& f) {
  app.add_option("--scope", f.scope, "Source globs eligible for experiments");
  app.add_option("--progress", f.progress, "Progress point(s) to measure");
  app.add_option("--seed", f.seed, "Seed for every random choice");
  app.add_option("--period", f.period, "Sampling period (ns/us/ms/s)");
  app.add_option("--batch", f.batch, "Samples per processing batch");
  app.add_option("--experiment", f.experiment, "Initial experiment length");
  app.add_option("--cooloff", f.cooloff, "Pause between experiments");
  app.add_option("--min-visits", f.min_visits,
                 "Visits per experiment before its length stops doubling");
  app.add_option("--fixed-line", f.fixed_line, "Only experiment on this line");
  app.add_option("--fixed-speedup", f.fixed_speedup,
                 "Only use this line speedup (percent)");
  app.add_option("--out", f.out, "Output file");
  app.add_option("--format", f.format, "text, json, csv or svg");
}

struct Settings {
  engine::EngineConfig config;
  Scope scope = Scope::everything();
  TimeNs jitter = 0;
  analysis::Format format = analysis::Format::kText;
};

// Validates every flag before any work starts. Bad values are usage errors.
Settings validate(const CommonFlags& f) {
  Settings s;
  try {
    s.config.sampling.period = parse_duration(f.period);
    s.config.sampling.batch_size = f.batch;
    s.config.experiment_duration = parse_duration(f.experiment);
    s.config.cooloff = parse_duration(f.cooloff);
    s.config.min_visits = f.min_visits;
    s.config.seed = f.seed;
    if (!f.fixed_line.empty()) s.config.fixed_line = parse_location(f.fixed_line);
    if (f.fixed_speedup) s.config.fixed_speedup = SpeedupPct(*f.fixed_speedup);
    s.config.validate();
    if (!f.scope.empty()) s.scope = Scope(f.scope);
    s.jitter = parse_duration(f.jitter);
    if (s.jitter >= s.config.sampling.period)
      throw UsageError("--jitter must be shorter than --period");
    s.format = analysis::parse_format(f.format);
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return s;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

std::string progress_of(const CommonFlags& f) {
  if (f.progress.size() > 1)
    throw UsageError("only one --progress point may be analyzed at a time");
  return f.progress.empty() ? std::string{} : f.progress.front();
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

int cmd_run(const CommonFlags& f, const std::string& mode,
            const std::vector<std::string>& command) {
  const auto s = validate(f);
  if (command.empty()) throw UsageError("run needs a program after --");
  const auto out = f.out.empty() ? std::string("profile.causard") : f.out;

  std::vector<std::pair<std::string, std::string>> env = {
      {"CAUSARD_OUT", out},
      {"CAUSARD_MODE", mode},
      {"CAUSARD_SEED", std::to_string(f.seed)},
      {"CAUSARD_PERIOD", f.period},
      {"CAUSARD_BATCH", std::to_string(f.batch)},
      {"CAUSARD_EXPERIMENT", f.experiment},
      {"CAUSARD_COOLOFF", f.cooloff},
      {"CAUSARD_MIN_VISITS", std::to_string(f.min_visits)},
      {"CAUSARD_SCOPE", join(s.scope.patterns(), ',')},
      {"CAUSARD_PROGRESS", join(f.progress, ',')},
      {"CAUSARD_FIXED_LINE", f.fixed_line},
      {"CAUSARD_FIXED_SPEEDUP",
       f.fixed_speedup ? std::to_string(*f.fixed_speedup) : std::string{}}};

  std::fflush(nullptr);
  const pid_t pid = fork();
  if (pid < 0) throw Error("fork failed");
  if (pid == 0) {
    for (const auto& [k, v] : env) setenv(k.c_str(), v.c_str(), 1);
    std::vector<char*> argv;
    for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execvp(argv[0], argv.data());
    std::perror(("causard: cannot execute " + command.front()).c_str());
    _exit(127);
  }
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
  }
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);

  std::cerr << "causard: seed " << f.seed;
  try {
    const auto profile = analysis::read_profile_file(out);
    std::cerr << ", " << profile.records.size() << " experiments written to "
              << out << '\n';
    for (const auto& w : profile.warnings) std::cerr << "causard: warning: " << w << '\n';
  } catch (const Error& e) {
    std::cerr << "\ncausard: " << e.what() << '\n';
    if (code == 0) code = kFailure;
  }
  return code;
}

int cmd_simulate(const CommonFlags& f, const std::string& path,
                 const std::vector<std::string>& oracle, bool summary) {
  const auto s = validate(f);
  const auto workload = sim::load_workload_file(path);
  auto progress = progress_of(f);

  if (!oracle.empty()) {
    if (oracle.size() != 2) throw UsageError("--oracle takes <file:line> <pct>");
    SourceLocation line;
    SpeedupPct pct;
    try {
      line = parse_location(oracle[0]);
      pct = SpeedupPct(std::stoi(oracle[1]));
    } catch (const std::exception& e) {
      throw UsageError(std::string("--oracle: ") + e.what());
    }
    if (!workload.has_line(line))
      throw DomainError(line.str() + " does not appear in " + path);
    if (progress.empty()) progress = sim::profile_options(workload, "").progress;
    std::cout << fmt::format("{:.2f}%\n",
                             sim::oracle_speedup(workload, line, pct, progress));
    return kOk;
  }

  sim::SimParams params;
  params.scope = s.scope;
  params.seed = f.seed;
  params.jitter = s.jitter;
  params.sampling = s.config.sampling;

  if (summary) {
    const auto r = sim::simulate(workload, params);
    std::cout << "wall " << format_duration(r.wall) << '\n';
    for (const auto& [name, n] : r.progress) std::cout << "progress " << name << ' ' << n << '\n';
    for (const auto& [line, stats] : r.lines)
      std::cout << fmt::format("line {} runs {} time {} samples {}\n", line.str(),
                               stats.executions, format_duration(stats.total_time),
                               stats.samples);
    for (const auto& [key, lat] : r.latency) {
      std::cout << "latency " << key << ' ';
      try {
        const auto est = analysis::estimate_latency(
            lat.begins, lat.ends, static_cast<double>(lat.inflight_ns), r.wall);
        std::cout << fmt::format("W {:.3f} ms (L {:.3f}, lambda {:.3f}/s)",
                                 est.latency_ns / 1e6, est.in_flight,
                                 est.arrival_rate);
      } catch (const InstabilityError& e) {
        std::cout << "unstable: " << e.what();
      }
      if (auto it = r.direct_latency.find(key); it != r.direct_latency.end())
        std::cout << fmt::format(", measured {:.3f} ms over {} items",
                                 it->second.mean() / 1e6, it->second.items);
      std::cout << '\n';
    }
    return kOk;
  }

  const auto r = sim::profile_simulated(workload, s.config, params);
  analysis::ProfileMeta meta;
  meta.source = "sim";
  meta.seed = f.seed;
  meta.config = s.config;
  meta.scope = s.scope.patterns();
  const auto out = f.out.empty() ? std::string("profile.causard") : f.out;
  analysis::ProfileWriter writer(out);
  for (const auto& rec : r.records) writer.write(rec);
  writer.finish(*r.totals, meta);
  std::cerr << "causard: seed " << f.seed << ", " << r.records.size()
            << " experiments over " << format_duration(r.wall)
            << " simulated, written to " << out << '\n';
  return kOk;
}

// Several runs of the same program merge into one profile. Totals are only
// kept when every run finished.
int cmd_report(const CommonFlags& f, const std::vector<std::string>& paths) {
  const auto s = validate(f);
  auto profile = analysis::read_profile_file(paths.front());
  for (std::size_t i = 1; i < paths.size(); ++i) {
    auto more = analysis::read_profile_file(paths[i]);
    profile.records.insert(profile.records.end(), more.records.begin(),
                           more.records.end());
    profile.warnings.insert(profile.warnings.end(), more.warnings.begin(),
                            more.warnings.end());
    if (profile.totals && more.totals) {
      profile.totals->merge(*more.totals);
    } else {
      profile.totals.reset();
    }
  }
  analysis::ProfileOptions options;
  options.progress = progress_of(f);
  emit(analysis::render_report(analysis::analyze(profile, options), s.format), f.out);
  return kOk;
}

int cmd_accuracy(const CommonFlags& f, const std::string& path,
                 const std::string& line_text, const std::string& delay_text) {
  const auto s = validate(f);
  SourceLocation line;
  TimeNs delay = 0;
  try {
    line = parse_location(line_text);
    delay = parse_duration(delay_text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto workload = sim::load_workload_file(path);
  sim::AccuracyOptions options;
  options.config = s.config;
  options.params.scope = s.scope;
  options.params.seed = f.seed;
  options.params.jitter = s.jitter;
  options.progress = progress_of(f);
  const auto r = sim::accuracy_protocol(workload, line, delay, options);
  std::cout << fmt::format(
      "line {}  mean time {}  inserted delay {}  line speedup {:.2f}%\n"
      "predicted {:.2f}%  observed {:.2f}%  error {:.2f} pp\n",
      line.str(), format_duration(r.mean_line_time), format_duration(delay),
      r.line_speedup, r.predicted, r.observed, std::abs(r.predicted - r.observed));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causard: causal profiler"};
  app.require_subcommand(1);

  CommonFlags run_flags, sim_flags, report_flags, accuracy_flags;

  auto* run = app.add_subcommand("run", "Profile an instrumented program");
  add_common(*run, run_flags);
  std::string mode = "profile";
  run->add_option("--mode", mode, "profile, sample (no delays) or off")
      ->check(CLI::IsMember({"profile", "sample", "off"}));
  std::vector<std::string> command;
  run->add_option("command", command, "Program and arguments (after --)");

  auto* simulate = app.add_subcommand("simulate", "Profile or query a workload");
  add_common(*simulate, sim_flags);
  std::string workload_path;
  simulate->add_option("workload", workload_path, "Workload file")->required();
  std::vector<std::string> oracle;
  simulate->add_option("--oracle", oracle,
                       "Print the real program speedup for <file:line> <pct>")
      ->expected(2);
  simulate->add_option("--jitter", sim_flags.jitter,
                       "Random variation of each sample interval");
  bool summary = false;
  simulate->add_flag("--summary", summary, "Print a plain run's statistics");

  auto* report = app.add_subcommand("report", "Render a profile");
  add_common(*report, report_flags);
  std::vector<std::string> profile_paths;
  report->add_option("profiles", profile_paths, "Profile file(s) to merge")->required();

  auto* accuracy = app.add_subcommand(
      "accuracy", "Compare predicted and observed effects of an inserted delay");
  add_common(*accuracy, accuracy_flags);
  std::string accuracy_path, line_text, delay_text;
  accuracy->add_option("workload", accuracy_path, "Workload file")->required();
  accuracy->add_option("--line", line_text, "Line to delay")->required();
  accuracy->add_option("--delay", delay_text, "Delay per run of the line")->required();
  accuracy->add_option("--jitter", accuracy_flags.jitter,
                       "Random variation of each sample interval");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_flags, mode, command);
    if (*simulate) return cmd_simulate(sim_flags, workload_path, oracle, summary);
    if (*report) return cmd_report(report_flags, profile_paths);
    if (*accuracy)
      return cmd_accuracy(accuracy_flags, accuracy_path, line_text, delay_text);
  } catch (const UsageError& e) {
    std::cerr << "causard: " << e.what() << '\n';
    return kUsage;
  } catch (const DeadlockError& e) {
    std::cerr << "causard: " << e.what() << '\n';
    return kDeadlock;
  } catch (const std::exception& e) {
    std::cerr << "causard: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
