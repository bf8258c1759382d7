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

#include "opsched/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <stdexcept>

#include "opsched/errors.hpp"

namespace opsched {

StrategyConfig StrategyConfig::baseline(int inter, int intra) {
  StrategyConfig c;
  c.uniform_inter = inter;
  c.uniform_intra = intra;
  return c;
}

StrategyConfig StrategyConfig::all_strategies(int physical_cores) {
  StrategyConfig c;
  c.avoid_width_change = c.per_op_width = c.corun = c.hyperthread = true;
  c.uniform_intra = physical_cores;
  return c;
}

void StrategyConfig::validate() const {
  if (!(reconfig_delta >= 0.0)) throw ConfigError("delta must be >= 0");
  if (min_useful_width < 1) throw ConfigError("min_useful_width must be >= 1");
  if (uniform_intra < 1) throw ConfigError("uniform_intra must be >= 1");
  if (uniform_inter < 1) throw ConfigError("uniform_inter must be >= 1");
  if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in (0, 1]");
}

namespace {

struct Candidate {
  const ReadyOp* op = nullptr;
  int target = 1;
  double solo = 0.0;
  std::string rule;
  int width = 0;
  double gain = 0.0;  // predicted drop from one more core
};

// Best predicted finish of an op that waits for running ops to free cores:
// live ops are released in predicted-end order on a scratch copy of the
// state, and after each release the op could start on min(target, empty)
// cores if that is at least min_width.
double best_wait_finish(const AllocationState& state, std::vector<RunningOp> running,
                        const std::string& op_id, int target, int min_width,
                        const WidthPredictor& predict, double now) {
  AllocationState scratch = state;
  std::sort(running.begin(), running.end(), [](const RunningOp& a, const RunningOp& b) {
    return a.predicted_end < b.predicted_end ||
           (a.predicted_end == b.predicted_end && a.op_id < b.op_id);
  });
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : running) {
    if (!scratch.live().contains(r.op_id)) continue;
    scratch.release(r.op_id);
    const int width = std::min(target, scratch.free_capacity(false).empty_cores);
    if (width < min_width) continue;
    best = std::min(best, std::max(now, r.predicted_end) + predict(op_id, width));
    if (width == target) break;
  }
  return best;
}

}  // namespace

std::vector<Grant> dispatch_step(std::span<const ReadyOp> ready, AllocationState& state,
                                 const WidthPredictor& predict, const StrategyConfig& config,
                                 WidthMemory& memory, double now,
                                 std::span<const RunningOp> running) {
  std::vector<Grant> grants;
  if (ready.empty()) return grants;
  const int cores = state.machine().physical_cores;

  std::vector<Candidate> cands;
  cands.reserve(ready.size());
  for (const auto& op : ready) {
    Candidate c;
    c.op = &op;
    c.target = std::clamp(op.tuned_width, 1, cores);
    c.rule = config.per_op_width ? "s2:tuned" : "uniform";
    if (config.avoid_width_change) {
      auto prev = memory.find(op.op_class);
      if (prev != memory.end() && prev->second != c.target) {
        const int keep = std::clamp(prev->second, 1, cores);
        if (predict(op.id, keep) <= predict(op.id, c.target) + config.reconfig_delta) {
          c.target = keep;
          c.rule = "s1:kept-width";
        }
      }
    }
    c.solo = predict(op.id, c.target);
    cands.push_back(std::move(c));
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return a.solo > b.solo || (a.solo == b.solo && a.op->id < b.op->id);
  });

  std::vector<RunningOp> in_flight(running.begin(), running.end());
  auto record = [&](Candidate& c, std::optional<Allocation> alloc, std::string rule) {
    if (!alloc) throw std::logic_error("dispatch planned a grant that does not fit");
    const int width = alloc->width;
    double penalty = 0.0;
    auto prev = memory.find(c.op->op_class);
    if (prev != memory.end() && prev->second != width) penalty = config.reconfig_delta;
    memory[c.op->op_class] = width;
    double predicted = predict(c.op->id, width);
    if (alloc->shared) predicted /= config.eta;
    in_flight.push_back({c.op->id, now + predicted + penalty});
    grants.push_back({c.op->id, std::move(*alloc), penalty, std::move(rule)});
  };
  auto commit = [&](Candidate& c, int width, bool allow_ht, std::string rule) {
    record(c, state.allocate(c.op->id, width, allow_ht), std::move(rule));
  };
  auto commit_shared = [&](Candidate& c, int width, std::string rule) {
    record(c, state.allocate_shared(c.op->id, width), std::move(rule));
  };

  std::vector<Candidate*> deferred;
  if (config.corun) {
    const int pool = state.free_capacity(false).empty_cores;
    auto refresh = [&](Candidate& c) {
      c.gain = predict(c.op->id, c.width) - predict(c.op->id, c.width + 1);
    };
    // Water-filling: everyone starts at min_useful_width, then each spare
    // core goes to the op whose predicted time drops the most.
    auto fill = [&](const std::set<const Candidate*>& waiting) {
      std::vector<Candidate*> active;
      int empty = pool;
      for (auto& c : cands) {
        if (waiting.contains(&c) || empty < config.min_useful_width) continue;
        c.width = config.min_useful_width;
        empty -= c.width;
        active.push_back(&c);
        if (c.width < c.target) refresh(c);
      }
      while (empty > 0) {
        Candidate* pick = nullptr;
        bool pick_toward_prev = false;
        for (auto* c : active) {
          if (c->width >= c->target) continue;
          bool toward_prev = false;
          if (config.avoid_width_change) {
            auto prev = memory.find(c->op->op_class);
            toward_prev = prev != memory.end() && c->width < prev->second;
          }
          bool better = !pick;
          if (pick) {
            const double tol = 1e-12 * std::max({1.0, std::abs(c->gain), std::abs(pick->gain)});
            if (c->gain > pick->gain + tol) {
              better = true;
            } else if (c->gain >= pick->gain - tol) {
              // Equal gain: the previous width first, then the slower op.
              if (toward_prev != pick_toward_prev) {
                better = toward_prev;
              } else {
                better = predict(c->op->id, c->width) > predict(pick->op->id, pick->width);
              }
            }
          }
          if (better) {
            pick = c;
            pick_toward_prev = toward_prev;
          }
        }
        if (!pick) break;
        ++pick->width;
        --empty;
        if (pick->width < pick->target) refresh(*pick);
      }
      return active;
    };

    // An op squeezed below its target waits for running ops to free more
    // cores when that is predicted to finish it sooner. The estimate places
    // the other ops at the widths they would get without it, and only the
    // op that saves the most moves to waiting per round. An op holds out at
    // most once: at the instant it became ready.
    std::set<const Candidate*> waiting;
    std::vector<Candidate*> active = fill(waiting);
    while (true) {
      Candidate* best = nullptr;
      double best_saving = 0.0;
      const auto current = active;
      for (auto* c : current) {
        if (c->width >= c->target || c->op->ready_since != now) continue;
        const double now_finish = now + predict(c->op->id, c->width);
        auto without = waiting;
        without.insert(c);
        AllocationState scratch = state;
        std::vector<RunningOp> scratch_running = in_flight;
        for (auto* o : fill(without)) {
          scratch.allocate(o->op->id, o->width, false);
          scratch_running.push_back({o->op->id, now + predict(o->op->id, o->width)});
        }
        active = fill(waiting);
        const double wait = best_wait_finish(scratch, scratch_running, c->op->id, c->target,
                                             c->width + 1, predict, now);
        if (now_finish - wait > best_saving) {
          best = c;
          best_saving = now_finish - wait;
        }
      }
      if (!best) break;
      waiting.insert(best);
      active = fill(waiting);
    }
    for (auto& c : cands) {
      if (std::find(active.begin(), active.end(), &c) == active.end()) deferred.push_back(&c);
    }
    for (auto* c : active) commit(*c, c->width, false, c->rule + "+s3:water-fill");
  } else {
    int live = static_cast<int>(state.live().size());
    for (auto& c : cands) {
      const int empty = state.free_capacity(false).empty_cores;
      if (live < config.uniform_inter && empty >= config.min_useful_width) {
        commit(c, std::min(c.target, empty), false, c.rule);
        ++live;
      } else {
        deferred.push_back(&c);
      }
    }
  }

  if (config.hyperthread) {
    // Deferred ops may run on spare hardware-thread slots of busy cores,
    // leaving empty cores to others, when that is predicted to finish them
    // before waiting for `target` empty cores would.
    int live = static_cast<int>(state.live().size());
    for (auto* c : deferred) {
      if (!config.corun && live >= config.uniform_inter) break;
      int shareable = 0;
      for (int occ : state.occupancy()) {
        shareable += occ > 0 && occ < state.machine().max_corun_per_core;
      }
      const int width = std::min(shareable, std::max(c->target, config.min_useful_width));
      if (width < config.min_useful_width) continue;
      const double shared_finish = now + predict(c->op->id, width) / config.eta;
      const double wait_finish = best_wait_finish(state, in_flight, c->op->id, c->target,
                                                  config.min_useful_width, predict, now);
      if (shared_finish < wait_finish) {
        commit_shared(*c, width, c->rule + "+s4:shared");
        ++live;
      }
    }
  }
  return grants;
}

WidthPredictor make_predictor(const DataflowGraph& graph, const TunedTable& tuned) {
  return [&graph, &tuned](const std::string& op_id, int width) {
    const auto& node = graph.nodes()[graph.index_of(op_id)];
    auto it = tuned.find(node.key);
    if (it != tuned.end() && it->second.history.samples.size() >= 2) {
      return predict(it->second.history, width);
    }
    return exec_time(node.cost, width);
  };
}

ScheduleTrace simulate(const DataflowGraph& graph, const MachineModel& machine,
                       const TunedTable& tuned, const StrategyConfig& config) {
  return simulate(graph, machine, tuned, config, make_predictor(graph, tuned));
}

ScheduleTrace simulate(const DataflowGraph& graph, const MachineModel& machine,
                       const TunedTable& tuned, const StrategyConfig& config,
                       const WidthPredictor& predict) {
  try {
    machine.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("machine: ") + e.what());
  }
  config.validate();
  if (config.min_useful_width > machine.physical_cores) {
    throw ConfigError("min_useful_width exceeds the machine's physical cores");
  }

  const auto n = graph.size();
  std::vector<ReadyOp> ops(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = graph.nodes()[i];
    ops[i].id = node.id;
    ops[i].op_class = node.key.op_type;
    ops[i].tuned_width = config.uniform_intra;
    if (config.per_op_width) {
      auto it = tuned.find(node.key);
      if (it == tuned.end()) {
        throw ConfigError("no tuned width for key " + node.key.to_string() + " (op '" + node.id +
                          "')");
      }
      ops[i].tuned_width = it->second.width;
    }
  }

  ScheduleTrace trace;
  trace.machine = machine;
  trace.strategy = config;
  trace.graph_digest = graph_digest(graph);

  AllocationState state(machine);
  WidthMemory memory;
  std::vector<std::size_t> pending(n);
  std::set<std::size_t> ready;  // node index order == id order
  for (std::size_t i = 0; i < n; ++i) {
    pending[i] = graph.producers(i).size();
    if (pending[i] == 0) ready.insert(i);
  }

  using Completion = std::pair<double, std::size_t>;
  std::priority_queue<Completion, std::vector<Completion>, std::greater<>> completions;
  std::vector<RunningOp> running;
  std::size_t done = 0;
  double now = 0.0;

  while (true) {
    if (!ready.empty()) {
      std::vector<ReadyOp> batch;
      batch.reserve(ready.size());
      for (auto i : ready) batch.push_back(ops[i]);
      auto grants = dispatch_step(batch, state, predict, config, memory, now, running);
      for (auto& g : grants) {
        const auto i = graph.index_of(g.op_id);
        const InterferenceContext ctx{g.allocation.shared, config.eta};
        const double duration = exec_time(graph.nodes()[i].cost, g.allocation.width, ctx) +
                                g.reconfig_penalty;
        double predicted = predict(g.op_id, g.allocation.width);
        if (g.allocation.shared) predicted /= config.eta;
        running.push_back({g.op_id, now + predicted + g.reconfig_penalty});
        completions.emplace(now + duration, i);
        trace.decisions.push_back({now, g.op_id, g.rule});
        trace.events.push_back({g.op_id, now, now + duration, g.allocation.width,
                                std::move(g.allocation.cores), g.allocation.shared,
                                g.reconfig_penalty});
        ready.erase(i);
      }
    }
    if (completions.empty()) {
      if (done != n) throw std::logic_error("simulation stalled with unfinished ops");
      break;
    }
    now = completions.top().first;
    while (!completions.empty() && completions.top().first == now) {
      const auto i = completions.top().second;
      completions.pop();
      const auto& id = graph.nodes()[i].id;
      state.release(id);
      std::erase_if(running, [&](const RunningOp& r) { return r.op_id == id; });
      ++done;
      for (auto c : graph.consumers(i)) {
        if (--pending[c] == 0) {
          ops[c].ready_since = now;
          ready.insert(c);
        }
      }
    }
  }

  if (!trace.events.empty()) {
    double first = trace.events.front().start;
    double last = trace.events.front().end;
    for (const auto& e : trace.events) {
      first = std::min(first, e.start);
      last = std::max(last, e.end);
    }
    trace.makespan = last - first;
  }
  return trace;
}

ScheduleTrace baseline_schedule(const DataflowGraph& graph, const MachineModel& machine,
                                int inter, int intra) {
  if (inter < 1 || intra < 1) throw ConfigError("baseline inter and intra must be >= 1");
  if (static_cast<long long>(inter) * intra > machine.hw_thread_capacity()) {
    throw ConfigError("baseline " + std::to_string(inter) + "x" + std::to_string(intra) +
                      " exceeds the machine's " + std::to_string(machine.hw_thread_capacity()) +
                      " hardware threads");
  }
  return simulate(graph, machine, {}, StrategyConfig::baseline(inter, intra));
}

}  // namespace opsched
