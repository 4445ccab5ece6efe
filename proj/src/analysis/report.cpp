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

#include "causard/analysis/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "causard/core/error.hpp"

namespace causard::analysis {
namespace {

double clamp_pct(double v) { return std::clamp(v, -100.0, 100.0); }

double max_speedup(const LineProfile& p) {
  double best = 0;
  for (const auto& c : p.curve) best = std::max(best, c.program_speedup);
  return best;
}

std::string render_text(const Report& r) {
  std::string out;
  for (const auto& w : r.warnings) out += "warning: " + w + "\n";
  if (r.profiles.empty()) {
    out += "no experiments: no line has a 0% baseline and enough distinct "
           "speedups\n";
  } else {
    out += fmt::format("causal profile, progress point '{}'\n", r.progress);
    std::size_t width = 4;
    for (const auto& p : r.profiles) width = std::max(width, p.line.str().size());
    out += fmt::format("{:<{}}  {:>8}  {:>11}  {:>6}  {}\n", "line", width,
                       "slope", "max speedup", "points", "class");
    for (const auto& p : r.profiles)
      out += fmt::format("{:<{}}  {:>8.3f}  {:>10.2f}%  {:>6}  {}{}\n",
                         p.line.str(), width, p.slope, max_speedup(p),
                         p.curve.size(), to_string(p.classification),
                         p.low_confidence ? " (low confidence)" : "");
  }
  for (const auto& l : r.latency) {
    if (l.estimate) {
      out += fmt::format(
          "latency '{}': W = {:.3f} ms (L = {:.3f} in flight, lambda = {:.3f}/s)\n",
          l.key, l.estimate->latency_ns / 1e6, l.estimate->in_flight,
          l.estimate->arrival_rate);
    } else {
      out += fmt::format("latency '{}': {}\n", l.key, l.error);
    }
  }
  return out;
}

std::string render_csv(const Report& r) {
  std::string out = "line,speedup,program_speedup,stderr\n";
  for (const auto& p : r.profiles)
    for (const auto& c : p.curve)
      out += fmt::format("{},{},{:.6f},{:.6f}\n", p.line.str(), c.speedup,
                         c.program_speedup, c.std_error);
  return out;
}

std::string render_json(const Report& r) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["progress"] = r.progress;
  j["lines"] = ordered_json::array();
  for (const auto& p : r.profiles) {
    ordered_json line;
    line["line"] = p.line.str();
    line["slope"] = p.slope;
    line["classification"] = to_string(p.classification);
    line["low_confidence"] = p.low_confidence;
    line["baseline_period_ns"] = p.baseline_period;
    line["phase_correction"] = p.correction;
    line["curve"] = ordered_json::array();
    for (const auto& c : p.curve)
      line["curve"].push_back({{"speedup", c.speedup},
                               {"program_speedup", c.program_speedup},
                               {"raw_speedup", c.raw_speedup},
                               {"stderr", c.std_error},
                               {"experiments", c.experiments},
                               {"visits", c.visits},
                               {"effective_ns", c.effective_duration}});
    j["lines"].push_back(std::move(line));
  }
  j["latency"] = ordered_json::array();
  for (const auto& l : r.latency) {
    ordered_json e = {{"key", l.key}};
    if (l.estimate) {
      e["latency_ns"] = l.estimate->latency_ns;
      e["in_flight"] = l.estimate->in_flight;
      e["arrival_rate"] = l.estimate->arrival_rate;
    } else {
      e["error"] = l.error;
    }
    j["latency"].push_back(std::move(e));
  }
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

std::string render_svg(const Report& r) {
  constexpr int kPlotW = 360, kPlotH = 220, kMargin = 50, kPanelH = kPlotH + 80;
  const int panels = std::max<int>(1, static_cast<int>(r.profiles.size()));
  const int width = kPlotW + 2 * kMargin;
  const int height = panels * kPanelH;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height);
  if (r.profiles.empty())
    out += "<text x=\"20\" y=\"30\">no experiments</text>\n";

  for (std::size_t i = 0; i < r.profiles.size(); ++i) {
    const auto& p = r.profiles[i];
    const int top = static_cast<int>(i) * kPanelH + 30;
    double lo = 0, hi = 0;
    for (const auto& c : p.curve) {
      lo = std::min(lo, clamp_pct(c.program_speedup - c.std_error));
      hi = std::max(hi, clamp_pct(c.program_speedup + c.std_error));
    }
    // Round the y range out to a multiple of 5%.
    lo = std::floor(lo / 5.0) * 5.0;
    hi = std::max(std::ceil(hi / 5.0) * 5.0, lo + 5.0);
    auto x = [&](double pct) { return kMargin + pct / 100.0 * kPlotW; };
    auto y = [&](double v) {
      return top + (hi - clamp_pct(v)) / (hi - lo) * kPlotH;
    };

    out += fmt::format("<text x=\"{}\" y=\"{}\" font-weight=\"bold\">{}</text>\n",
                       kMargin, top - 10, p.line.str());
    out += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" "
        "stroke=\"#888\"/>\n",
        kMargin, top, kPlotW, kPlotH);
    out += fmt::format(
        "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" "
        "stroke=\"#bbb\" stroke-dasharray=\"3,3\"/>\n",
        x(0), y(0), x(100), y(0));
    for (int tick = 0; tick <= 100; tick += 25)
      out += fmt::format(
          "<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}%</text>\n",
          x(tick), top + kPlotH + 14, tick);
    out += fmt::format(
        "<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.0f}%</text>\n"
        "<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.0f}%</text>\n",
        kMargin - 4, y(hi) + 4, hi, kMargin - 4, y(lo) + 4, lo);
    out += fmt::format(
        "<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">line speedup</text>\n",
        x(50), top + kPlotH + 30);

    std::string band, upper, lower, curve;
    for (const auto& c : p.curve) {
      upper += fmt::format("{:.1f},{:.1f} ", x(c.speedup),
                           y(c.program_speedup + c.std_error));
      curve += fmt::format("{:.1f},{:.1f} ", x(c.speedup), y(c.program_speedup));
    }
    for (auto it = p.curve.rbegin(); it != p.curve.rend(); ++it)
      lower += fmt::format("{:.1f},{:.1f} ", x(it->speedup),
                           y(it->program_speedup - it->std_error));
    out += "<polygon fill=\"#ddd\" stroke=\"none\" points=\"" + upper + lower +
           "\"/>\n";
    out += "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" "
           "points=\"" + curve + "\"/>\n";
    for (const auto& c : p.curve)
      out += fmt::format(
          "<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"2.5\" fill=\"#1f4e9c\"/>\n",
          x(c.speedup), y(c.program_speedup));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace

Format parse_format(std::string_view name) {
  if (name == "text") return Format::kText;
  if (name == "json") return Format::kJson;
  if (name == "csv") return Format::kCsv;
  if (name == "svg") return Format::kSvg;
  throw UsageError("unknown format '" + std::string(name) +
                   "' (expected text, json, csv or svg)");
}

Report analyze(const Profile& profile, const ProfileOptions& options) {
  Report report;
  report.warnings = profile.warnings;
  const auto merged = merge_records(profile.records);
  const engine::RunTotals* totals = profile.totals ? &*profile.totals : nullptr;
  report.progress = options.progress.empty()
                        ? default_progress_point(merged, totals)
                        : options.progress;
  auto opts = options;
  opts.progress = report.progress;
  report.profiles = build_profiles(merged, totals, opts);
  if (totals) {
    for (const auto& [key, l] : totals->latency) {
      LatencyReport lr{key, std::nullopt, {}};
      try {
        lr.estimate = estimate_latency(l.begins, l.ends,
                                       static_cast<double>(l.inflight_ns),
                                       totals->wall_time);
      } catch (const DomainError& e) {
        lr.error = e.what();
      }
      report.latency.push_back(std::move(lr));
    }
  }
  return report;
}

std::string render_report(const Report& report, Format format) {
  switch (format) {
    case Format::kText: return render_text(report);
    case Format::kJson: return render_json(report);
    case Format::kCsv: return render_csv(report);
    case Format::kSvg: return render_svg(report);
  }
  throw UsageError("unknown format");
}

}  // namespace causard::analysis
