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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "opsched/graph.hpp"
#include "opsched/machine.hpp"
#include "opsched/perf_model.hpp"
#include "opsched/profiler.hpp"
#include "opsched/reporting.hpp"
#include "opsched/scheduler.hpp"

// JSON documents exchanged between CLI invocations. Every writer produces
// text its reader accepts; parse failures throw ParseError with the field
// path, semantic violations throw ValidationError.
namespace opsched::io {

std::string read_file(const std::string& path);  // throws ParseError if unreadable
void write_file(const std::string& path, std::string_view text);

// {"physical_cores":68,"hw_threads_per_core":4,"max_corun_per_core":2}
MachineModel parse_machine(std::string_view text);
std::string serialize_machine(const MachineModel& machine);

// {"s1":bool,"s2":bool,"s3":bool,"s4":bool,"delta":ms,"min_useful_width":int,
//  "uniform_intra":int,"uniform_inter":int,"eta":float}; absent keys keep defaults.
StrategyConfig parse_strategy(std::string_view text, StrategyConfig defaults = {});
std::string serialize_strategy(const StrategyConfig& config);

// [{"type","signature","width","predicted_ms","evaluations","history":[[w,ms],...]}]
// "evaluations" and "history" are optional on input.
TunedTable parse_tuned_table(std::string_view text);
std::string serialize_tuned_table(const TunedTable& table);

// [{"type","signature","repeats","noise_sigma","seed","widths":[...],"medians":[...]}]
std::vector<ProfileHistory> parse_profile_store(std::string_view text);
std::string serialize_profile_store(std::span<const ProfileHistory> histories);

ScheduleTrace parse_trace(std::string_view text);
std::string serialize_trace(const ScheduleTrace& trace);

std::string serialize_report(const RunReport& report);
std::string serialize_comparison(std::span<const ComparisonRow> rows);

// [{"type","signature","weight","t_s":[min,max],"t_w":[min,max],"c":[min,max]}]
std::vector<OpMixEntry> parse_op_mix(std::string_view text);

}  // namespace opsched::io
