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

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "opsched/scheduler.hpp"

namespace opsched {

struct CorunStats {
  std::vector<std::pair<double, int>> series;  // (event time, live ops right after it)
  double mean = 0.0;
};

/// One sample per launch and per finish, each counting the ops live
/// immediately after that instant. `window` keeps only the middle `window`
/// samples, like looking at a stretch from the middle of a step.
CorunStats corun_stats(const ScheduleTrace& trace, std::optional<std::size_t> window = {});

/// Granted core-time (width x duration, a shared slot counts like a core)
/// over physical_cores x makespan, capped at 1.
double utilization(const ScheduleTrace& trace);

struct RunReport {
  double makespan = 0.0;
  double utilization = 0.0;
  CorunStats corun;
  std::map<std::string, double> speedup_vs;  // baseline name -> baseline makespan / makespan
};

RunReport make_report(const ScheduleTrace& trace,
                      const std::map<std::string, const ScheduleTrace*>& baselines = {},
                      std::optional<std::size_t> window = {});

struct NamedTrace {
  std::string name;
  ScheduleTrace trace;
};

struct ComparisonRow {
  std::string name;
  double makespan = 0.0;
  double speedup = 0.0;  // vs the first trace
  double utilization = 0.0;
  double corun_mean = 0.0;
};

/// Rows in input order; speedups relative to the first trace. Throws
/// ConfigError when the traces ran different graphs or machines.
std::vector<ComparisonRow> compare(std::span<const NamedTrace> traces);

std::string format_comparison(std::span<const ComparisonRow> rows);

/// Chrome trace event JSON: one complete ("X") event per op, times in
/// microseconds, thread id = lowest core index.
std::string export_chrome_trace(const ScheduleTrace& trace);

}  // namespace opsched
