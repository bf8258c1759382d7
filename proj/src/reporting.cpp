/*
 * Copyright 2026 The opsched Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "opsched/reporting.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "json.hpp"
#include "opsched/errors.hpp"

namespace opsched {

CorunStats corun_stats(const ScheduleTrace& trace, std::optional<std::size_t> window) {
  // +1 for a launch, -1 for a finish. At equal times finishes go first, so a
  // sample never counts an op that has ended at that instant.
  std::vector<std::pair<double, int>> edges;
  edges.reserve(trace.events.size() * 2);
  for (const auto& e : trace.events) {
    edges.emplace_back(e.start, +1);
    edges.emplace_back(e.end, -1);
  }
  std::sort(edges.begin(), edges.end());

  CorunStats stats;
  std::size_t i = 0;
  int live = 0;
  while (i < edges.size()) {
    const double t = edges[i].first;
    std::size_t j = i;
    while (j < edges.size() && edges[j].first == t) live += edges[j++].second;
    for (; i < j; ++i) stats.series.emplace_back(t, live);
  }

  if (window && *window < stats.series.size()) {
    const auto skip = (stats.series.size() - *window) / 2;
    stats.series = {stats.series.begin() + static_cast<std::ptrdiff_t>(skip),
                    stats.series.begin() + static_cast<std::ptrdiff_t>(skip + *window)};
  }
  if (!stats.series.empty()) {
    double sum = 0.0;
    for (const auto& s : stats.series) sum += s.second;
    stats.mean = sum / static_cast<double>(stats.series.size());
  }
  return stats;
}

double utilization(const ScheduleTrace& trace) {
  if (trace.events.empty() || trace.makespan <= 0.0) return 0.0;
  double busy = 0.0;
  for (const auto& e : trace.events) busy += e.width * (e.end - e.start);
  return std::min(1.0, busy / (trace.machine.physical_cores * trace.makespan));
}

RunReport make_report(const ScheduleTrace& trace,
                      const std::map<std::string, const ScheduleTrace*>& baselines,
                      std::optional<std::size_t> window) {
  RunReport r;
  r.makespan = trace.makespan;
  r.utilization = utilization(trace);
  r.corun = corun_stats(trace, window);
  for (const auto& [name, base] : baselines) {
    r.speedup_vs[name] = trace.makespan > 0.0 ? base->makespan / trace.makespan : 0.0;
  }
  return r;
}

std::vector<ComparisonRow> compare(std::span<const NamedTrace> traces) {
  std::vector<ComparisonRow> rows;
  if (traces.empty()) return rows;
  const auto& ref = traces.front().trace;
  for (const auto& t : traces) {
    if (t.trace.graph_digest != ref.graph_digest) {
      throw ConfigError("trace '" + t.name + "' ran a different graph than '" +
                        traces.front().name + "'");
    }
    if (!(t.trace.machine == ref.machine)) {
      throw ConfigError("trace '" + t.name + "' ran on a different machine than '" +
                        traces.front().name + "'");
    }
    ComparisonRow row;
    row.name = t.name;
    row.makespan = t.trace.makespan;
    row.speedup = t.trace.makespan > 0.0 ? ref.makespan / t.trace.makespan : 0.0;
    row.utilization = utilization(t.trace);
    row.corun_mean = corun_stats(t.trace).mean;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_comparison(std::span<const ComparisonRow> rows) {
  std::size_t name_w = 13;
  for (const auto& r : rows) name_w = std::max(name_w, r.name.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %14s %9s %12s %11s\n", static_cast<int>(name_w),
                "configuration", "makespan_ms", "speedup", "utilization", "corun_mean");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s %14.4f %9.3f %12.4f %11.4f\n", static_cast<int>(name_w),
                  r.name.c_str(), r.makespan, r.speedup, r.utilization, r.corun_mean);
    out += buf;
  }
  return out;
}

std::string export_chrome_trace(const ScheduleTrace& trace) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : trace.events) {
    const int tid = e.cores.empty() ? 0 : *std::min_element(e.cores.begin(), e.cores.end());
    std::vector<int> cores = e.cores;
    std::sort(cores.begin(), cores.end());
    events.push_back({{"name", e.op_id},
                      {"ph", "X"},
                      {"ts", e.start * 1000.0},
                      {"dur", (e.end - e.start) * 1000.0},
                      {"pid", 0},
                      {"tid", tid},
                      {"args", {{"width", e.width}, {"shared", e.shared}, {"cores", cores}}}});
  }
  return events.dump();
}

}  // namespace opsched
