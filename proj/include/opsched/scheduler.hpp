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

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "opsched/cost_model.hpp"
#include "opsched/graph.hpp"
#include "opsched/machine.hpp"
#include "opsched/perf_model.hpp"

namespace opsched {

/// Runtime strategy switches.
///
///  - S1 `avoid_width_change`: keep the previous width used for the same op
///    type when that is predicted to cost no more than switching (which pays
///    `reconfig_delta`), and prefer it within equal marginal gains.
///  - S2 `per_op_width`: use the tuned width of each op key instead of
///    `uniform_intra`.
///  - S3 `corun`: split empty cores among all ready ops by marginal predicted
///    gain instead of launching at most `uniform_inter` ops.
///  - S4 `hyperthread`: ops that find no empty cores may take spare hardware
///    thread slots of occupied cores when that is predicted to finish first.
///
/// `reconfig_delta` is charged whenever an op's granted width differs from
/// the previous grant for the same op type, whatever the switches.
struct StrategyConfig {
  bool avoid_width_change = false;
  double reconfig_delta = 0.1;
  bool per_op_width = false;
  bool corun = false;
  bool hyperthread = false;
  int min_useful_width = 1;
  int uniform_intra = 68;
  int uniform_inter = 1;
  double eta = kDefaultSharedEta;

  bool operator==(const StrategyConfig&) const = default;

  static StrategyConfig baseline(int inter, int intra);
  static StrategyConfig all_strategies(int physical_cores);
  void validate() const;  // throws ConfigError
};

struct ScheduleEvent {
  std::string op_id;
  double start = 0.0;
  double end = 0.0;
  int width = 0;
  std::vector<int> cores;
  bool shared = false;
  double reconfig_penalty = 0.0;

  bool operator==(const ScheduleEvent&) const = default;
};

/// Which rule produced a grant (e.g. "s3:water-fill", "s4:shared").
struct DispatchDecision {
  double time = 0.0;
  std::string op_id;
  std::string rule;

  bool operator==(const DispatchDecision&) const = default;
};

struct ScheduleTrace {
  std::vector<ScheduleEvent> events;  // in dispatch order
  double makespan = 0.0;
  MachineModel machine;
  StrategyConfig strategy;
  std::string graph_digest;
  std::vector<DispatchDecision> decisions;

  bool operator==(const ScheduleTrace&) const = default;
};

/// Predicted solo (unshared) time of an op at a width.
using WidthPredictor = std::function<double(const std::string& op_id, int width)>;

struct ReadyOp {
  std::string id;
  std::string op_class;  // width-change class: the op type
  int tuned_width = 1;   // tuned width under S2, uniform_intra otherwise
  double ready_since = 0.0;  // only an op that just became ready may hold out
};

struct RunningOp {
  std::string op_id;
  double predicted_end = 0.0;
};

/// Previous granted width per op class, carried across dispatches.
using WidthMemory = std::map<std::string, int>;

struct Grant {
  std::string op_id;
  Allocation allocation;
  double reconfig_penalty = 0.0;
  std::string rule;
};

/// One scheduling decision at time `now`. Grants are committed to `state`
/// and `memory`; ops that get nothing are deferred. `running` must list every
/// live op of `state` with its predicted end time.
std::vector<Grant> dispatch_step(std::span<const ReadyOp> ready, AllocationState& state,
                                 const WidthPredictor& predict, const StrategyConfig& config,
                                 WidthMemory& memory, double now,
                                 std::span<const RunningOp> running);

/// Discrete-event execution of one training step. Durations come from each
/// node's cost curve; decisions come from `predict`. Throws ConfigError
/// before simulating if S2 is on and a key has no tuned width.
ScheduleTrace simulate(const DataflowGraph& graph, const MachineModel& machine,
                       const TunedTable& tuned, const StrategyConfig& config,
                       const WidthPredictor& predict);

/// simulate() with the default predictor: tuned history where a key has
/// one, the node's cost curve otherwise.
ScheduleTrace simulate(const DataflowGraph& graph, const MachineModel& machine,
                       const TunedTable& tuned, const StrategyConfig& config);

WidthPredictor make_predictor(const DataflowGraph& graph, const TunedTable& tuned);

/// Uniform inter/intra configuration with every strategy off. Throws
/// ConfigError if inter * intra exceeds the machine's hardware threads.
ScheduleTrace baseline_schedule(const DataflowGraph& graph, const MachineModel& machine,
                                int inter, int intra);

}  // namespace opsched
