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

// opsched: generate graphs, profile and tune op widths, simulate schedules,
// compare runs and export Chrome traces. Exit codes: 0 ok, 2 usage or
// configuration error, 1 internal invariant violation.

#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "opsched/errors.hpp"
#include "opsched/graph.hpp"
#include "opsched/io.hpp"
#include "opsched/perf_model.hpp"
#include "opsched/profiler.hpp"
#include "opsched/reporting.hpp"
#include "opsched/scheduler.hpp"

namespace fs = std::filesystem;
using namespace opsched;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInternal = 1;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("opsched");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("LOG_LEVEL")) {
    const std::string s = lvl;
    if (s == "error") spdlog::set_level(spdlog::level::err);
    else if (s == "warn") spdlog::set_level(spdlog::level::warn);
    else if (s == "info") spdlog::set_level(spdlog::level::info);
    else if (s == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring unknown LOG_LEVEL '{}'", s);
  }
}

DataflowGraph load_graph(const std::string& path) {
  try {
    return parse_graph(io::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

MachineModel load_machine(const std::string& path) {
  return io::parse_machine(io::read_file(path));
}

struct NoiseFlags {
  int repeats = 1;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  NoiseModel model() const { return {repeats, sigma, seed}; }
};

void add_noise_flags(CLI::App* cmd, NoiseFlags& f) {
  cmd->add_option("--repeats", f.repeats, "Measurements per width (median is kept)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--noise-sigma", f.sigma, "Relative lognormal measurement noise")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", f.seed, "Seed for measurement noise");
}

// ---- gen -------------------------------------------------------------------

struct GenFlags {
  std::string pattern = "chain";
  int depth = 1;
  int fanout = 1;
  std::uint64_t seed = 0;
  std::string op_mix;
  std::string out;
};

int run_gen(const GenFlags& f) {
  GraphGenSpec spec;
  try {
    spec.pattern = parse_pattern(f.pattern);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  spec.depth = f.depth;
  spec.fanout = f.fanout;
  spec.seed = f.seed;
  spec.op_mix = f.op_mix.empty() ? default_op_mix() : io::parse_op_mix(io::read_file(f.op_mix));
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto graph = generate_synthetic(spec);
  io::write_file(f.out, serialize_graph(graph));
  std::cout << "nodes: " << graph.size() << " edges: " << graph.edges().size() << "\n";
  return 0;
}

// ---- profile ---------------------------------------------------------------

struct ProfileFlags {
  std::string graph;
  std::string machine;
  std::vector<int> widths;
  NoiseFlags noise;
  std::string out;
};

int run_profile(const ProfileFlags& f) {
  const auto graph = load_graph(f.graph);
  const auto machine = load_machine(f.machine);
  auto widths = f.widths;
  if (widths.empty()) widths = TunerConfig::defaults(machine.physical_cores).coarse_lattice;
  std::vector<ProfileHistory> store;
  for (const auto& [key, curve] : distinct_keys(graph)) {
    try {
      store.push_back(profile_op(key, curve, widths, f.noise.model()));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    spdlog::info("profiled {} at {} widths", key.to_string(), widths.size());
  }
  io::write_file(f.out, io::serialize_profile_store(store));
  std::cout << "profiled " << store.size() << " op keys\n";
  return 0;
}

// ---- tune ------------------------------------------------------------------

struct TuneFlags {
  std::string graph;
  std::string machine;
  std::string profile;
  int max_evals = 16;
  int min_step = 1;
  NoiseFlags noise;
  std::string out;
};

int run_tune(const TuneFlags& f) {
  const auto graph = load_graph(f.graph);
  const auto machine = load_machine(f.machine);
  std::map<OpKey, ProfileHistory> stored;
  if (!f.profile.empty()) {
    for (auto& h : io::parse_profile_store(io::read_file(f.profile))) stored[h.key] = std::move(h);
  }
  auto config = TunerConfig::defaults(machine.physical_cores);
  config.max_evals = f.max_evals;
  config.min_step = f.min_step;

  TunedTable table;
  for (const auto& [key, curve] : distinct_keys(graph)) {
    const ProfileHistory* prior = stored.contains(key) ? &stored.at(key) : nullptr;
    int fresh = 0;
    auto evaluate = [&](int w) {
      if (prior) {
        if (auto it = prior->samples.find(w); it != prior->samples.end()) return it->second;
      }
      ++fresh;
      return measure(key, curve, w, f.noise.model());
    };
    TunedWidth t = hill_climb(evaluate, config);
    t.key = key;
    t.history.key = key;
    t.history.repeats = f.noise.repeats;
    t.history.noise_sigma = f.noise.sigma;
    t.history.seed = f.noise.seed;
    std::cout << key.to_string() << ": width " << t.width << ", predicted " << t.predicted_ms
              << " ms, " << t.evaluations << " evaluations";
    if (prior) std::cout << " (" << fresh << " measured, rest from profile store)";
    std::cout << "\n";
    table.emplace(key, std::move(t));
  }
  io::write_file(f.out, io::serialize_tuned_table(table));
  return 0;
}

// ---- schedule --------------------------------------------------------------

struct ScheduleFlags {
  std::string graph;
  std::string machine;
  std::string tuned;
  std::string profile;
  std::string strategy;
  bool s1 = false, s2 = false, s3 = false, s4 = false, all = false;
  std::string baseline;
  std::optional<double> delta;
  std::optional<double> eta;
  std::optional<int> min_useful;
  std::optional<std::size_t> events_window;
  NoiseFlags noise;  // measured predictions for ops without a history
  bool ablation = false;
  int jobs = 1;
  std::string out_dir = ".";
};

std::pair<int, int> parse_baseline(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument("");
    std::size_t used_a = 0, used_b = 0;
    const int inter = std::stoi(text.substr(0, x), &used_a);
    const int intra = std::stoi(text.substr(x + 1), &used_b);
    if (used_a != x || used_b != text.size() - x - 1 || inter < 1 || intra < 1) {
      throw std::invalid_argument("");
    }
    return {inter, intra};
  } catch (const std::exception&) {
    throw UsageError("--baseline expects INTERxINTRA with positive integers, e.g. 1x68");
  }
}

// Tuned histories first, then profile-store histories, then a measurement of
// the node's curve (exact when sigma is 0).
WidthPredictor build_predictor(const DataflowGraph& graph, const TunedTable& tuned,
                               const std::map<OpKey, ProfileHistory>& profiles,
                               const NoiseModel& noise) {
  return [&graph, &tuned, &profiles, noise](const std::string& op_id, int width) {
    const auto& node = graph.nodes()[graph.index_of(op_id)];
    if (auto it = tuned.find(node.key);
        it != tuned.end() && it->second.history.samples.size() >= 2) {
      return predict(it->second.history, width);
    }
    if (auto it = profiles.find(node.key); it != profiles.end() && it->second.samples.size() >= 2) {
      return predict(it->second, width);
    }
    return measure(node.key, node.cost, width, noise);
  };
}

void write_run(const fs::path& dir, const std::string& stem, const ScheduleTrace& trace) {
  io::write_file((dir / (stem + ".trace.json")).string(), io::serialize_trace(trace));
  io::write_file((dir / (stem + ".chrome.json")).string(), export_chrome_trace(trace) + "\n");
}

int run_schedule(const ScheduleFlags& f) {
  const auto graph = load_graph(f.graph);
  const auto machine = load_machine(f.machine);
  TunedTable tuned;
  if (!f.tuned.empty()) tuned = io::parse_tuned_table(io::read_file(f.tuned));
  std::map<OpKey, ProfileHistory> profiles;
  if (!f.profile.empty()) {
    for (auto& h : io::parse_profile_store(io::read_file(f.profile))) profiles[h.key] = std::move(h);
  }

  auto [inter, intra] = f.baseline.empty() ? std::pair{1, machine.physical_cores}
                                           : parse_baseline(f.baseline);
  StrategyConfig config = StrategyConfig::baseline(inter, intra);
  if (!f.strategy.empty()) config = io::parse_strategy(io::read_file(f.strategy), config);
  if (f.all) config.avoid_width_change = config.per_op_width = config.corun = config.hyperthread = true;
  if (f.s1) config.avoid_width_change = true;
  if (f.s2) config.per_op_width = true;
  if (f.s3) config.corun = true;
  if (f.s4) config.hyperthread = true;
  if (f.delta) config.reconfig_delta = *f.delta;
  if (f.eta) config.eta = *f.eta;
  if (f.min_useful) config.min_useful_width = *f.min_useful;

  if ((config.per_op_width || f.ablation) && tuned.empty()) {
    throw ConfigError(
        "--s2 needs a tuned-width table; run `opsched tune --graph " + f.graph + " --machine " +
        f.machine + " -o tuned.json` and pass --tuned tuned.json");
  }
  if (static_cast<long long>(inter) * intra > machine.hw_thread_capacity()) {
    throw ConfigError("--baseline " + std::to_string(inter) + "x" + std::to_string(intra) +
                      " exceeds the machine's hardware threads");
  }
  const auto predictor = build_predictor(graph, tuned, profiles, f.noise.model());

  const fs::path dir = f.out_dir;
  fs::create_directories(dir);
  const std::string base_name = "baseline_" + std::to_string(inter) + "x" + std::to_string(intra);

  if (f.ablation) {
    std::vector<std::pair<std::string, StrategyConfig>> configs;
    StrategyConfig c = StrategyConfig::baseline(inter, intra);
    c.reconfig_delta = config.reconfig_delta;
    c.eta = config.eta;
    c.min_useful_width = config.min_useful_width;
    configs.emplace_back(base_name, c);
    c.avoid_width_change = c.per_op_width = true;
    configs.emplace_back("s1s2", c);
    c.corun = true;
    configs.emplace_back("s1s2s3", c);
    c.hyperthread = true;
    configs.emplace_back("s1s2s3s4", c);

    std::vector<NamedTrace> runs(configs.size());
    const auto jobs = static_cast<std::size_t>(std::max(1, f.jobs));
    for (std::size_t first = 0; first < configs.size(); first += jobs) {
      std::vector<std::future<ScheduleTrace>> batch;
      for (std::size_t i = first; i < std::min(configs.size(), first + jobs); ++i) {
        batch.push_back(std::async(std::launch::async, [&, i] {
          return simulate(graph, machine, tuned, configs[i].second, predictor);
        }));
      }
      for (std::size_t i = 0; i < batch.size(); ++i) {
        runs[first + i] = {configs[first + i].first, batch[i].get()};
      }
    }
    for (const auto& r : runs) write_run(dir, r.name, r.trace);
    const auto rows = compare(runs);
    io::write_file((dir / "comparison.json").string(), io::serialize_comparison(rows));
    std::cout << format_comparison(rows);
    return 0;
  }

  const auto trace = simulate(graph, machine, tuned, config, predictor);
  write_run(dir, "run", trace);

  std::map<std::string, const ScheduleTrace*> baselines;
  std::optional<ScheduleTrace> base;
  if (config == StrategyConfig::baseline(inter, intra)) {
    baselines[base_name] = &trace;
  } else {
    auto bc = StrategyConfig::baseline(inter, intra);
    bc.reconfig_delta = config.reconfig_delta;
    bc.eta = config.eta;
    bc.min_useful_width = config.min_useful_width;
    base = simulate(graph, machine, tuned, bc, predictor);
    write_run(dir, base_name, *base);
    baselines[base_name] = &*base;
  }
  const auto report = make_report(trace, baselines, f.events_window);
  io::write_file((dir / "report.json").string(), io::serialize_report(report));

  std::cout << "makespan_ms: " << report.makespan << "\n"
            << "utilization: " << report.utilization << "\n"
            << "corun_mean: " << report.corun.mean << "\n";
  for (const auto& [name, s] : report.speedup_vs) {
    std::cout << "speedup_vs_" << name << ": " << s << "\n";
  }
  return 0;
}

// ---- compare / export ------------------------------------------------------

struct CompareFlags {
  std::vector<std::string> traces;
  std::vector<std::string> names;
  std::string json_out;
  int jobs = 1;
};

int run_compare(const CompareFlags& f) {
  if (f.traces.size() < 2) throw UsageError("compare needs at least two trace files");
  if (!f.names.empty() && f.names.size() != f.traces.size()) {
    throw UsageError("--names must give one name per trace");
  }
  std::vector<NamedTrace> runs(f.traces.size());
  const auto jobs = static_cast<std::size_t>(std::max(1, f.jobs));
  for (std::size_t first = 0; first < f.traces.size(); first += jobs) {
    std::vector<std::future<ScheduleTrace>> batch;
    for (std::size_t i = first; i < std::min(f.traces.size(), first + jobs); ++i) {
      batch.push_back(std::async(std::launch::async,
                                 [&, i] { return io::parse_trace(io::read_file(f.traces[i])); }));
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto k = first + i;
      runs[k] = {f.names.empty() ? fs::path(f.traces[k]).filename().string() : f.names[k],
                 batch[i].get()};
    }
  }
  const auto rows = compare(runs);
  std::cout << format_comparison(rows);
  if (!f.json_out.empty()) io::write_file(f.json_out, io::serialize_comparison(rows));
  return 0;
}

int run_export(const std::string& trace_path, const std::string& out) {
  const auto trace = io::parse_trace(io::read_file(trace_path));
  io::write_file(out, export_chrome_trace(trace) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Moldable op scheduling: tune per-op widths and simulate co-run strategies"};
  app.require_subcommand(1);

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic graph file");
  gen_cmd->add_option("--pattern", gen.pattern,
                      "chain, fork_join, resnet_block, inception_block or random_dag");
  gen_cmd->add_option("--depth", gen.depth);
  gen_cmd->add_option("--fanout", gen.fanout);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--op-mix", gen.op_mix, "JSON op-mix file (defaults to a built-in mix)");
  gen_cmd->add_option("-o,--out", gen.out)->required();

  ProfileFlags prof;
  auto* prof_cmd = app.add_subcommand("profile", "Profile every op key at fixed widths");
  prof_cmd->add_option("--graph", prof.graph)->required();
  prof_cmd->add_option("--machine", prof.machine)->required();
  prof_cmd->add_option("--widths", prof.widths)->delimiter(',');
  add_noise_flags(prof_cmd, prof.noise);
  prof_cmd->add_option("-o,--out", prof.out)->required();

  TuneFlags tune;
  auto* tune_cmd = app.add_subcommand("tune", "Hill-climb the best width of every op key");
  tune_cmd->add_option("--graph", tune.graph)->required();
  tune_cmd->add_option("--machine", tune.machine)->required();
  tune_cmd->add_option("--profile", tune.profile, "Reuse measurements from a profile store");
  tune_cmd->add_option("--max-evals", tune.max_evals)->check(CLI::NonNegativeNumber);
  tune_cmd->add_option("--min-step", tune.min_step)->check(CLI::PositiveNumber);
  add_noise_flags(tune_cmd, tune.noise);
  tune_cmd->add_option("-o,--out", tune.out)->required();

  ScheduleFlags sched;
  auto* sched_cmd = app.add_subcommand("schedule", "Simulate one training step");
  sched_cmd->add_option("--graph", sched.graph)->required();
  sched_cmd->add_option("--machine", sched.machine)->required();
  sched_cmd->add_option("--tuned", sched.tuned);
  sched_cmd->add_option("--profile", sched.profile);
  sched_cmd->add_option("--strategy", sched.strategy, "Strategy config JSON");
  sched_cmd->add_flag("--s1", sched.s1, "Avoid width changes");
  sched_cmd->add_flag("--s2", sched.s2, "Per-op tuned widths");
  sched_cmd->add_flag("--s3", sched.s3, "Co-run on disjoint cores");
  sched_cmd->add_flag("--s4", sched.s4, "Hyper-thread sharing");
  sched_cmd->add_flag("--all-strategies", sched.all);
  sched_cmd->add_option("--baseline", sched.baseline, "Uniform INTERxINTRA (default 1x<cores>)");
  sched_cmd->add_option("--delta", sched.delta, "Width-change penalty (ms)");
  sched_cmd->add_option("--eta", sched.eta, "Shared-slot throughput fraction");
  sched_cmd->add_option("--min-useful-width", sched.min_useful);
  sched_cmd->add_option("--events-window", sched.events_window,
                        "Co-run statistics over the middle N events");
  add_noise_flags(sched_cmd, sched.noise);
  sched_cmd->add_flag("--ablation", sched.ablation,
                      "Run baseline, +S1S2, +S3, +S4 and write a comparison");
  sched_cmd->add_option("--jobs", sched.jobs)->check(CLI::PositiveNumber);
  sched_cmd->add_option("-o,--out-dir", sched.out_dir);

  CompareFlags cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare traces of the same graph and machine");
  cmp_cmd->add_option("traces", cmp.traces)->required();
  cmp_cmd->add_option("--names", cmp.names)->delimiter(',');
  cmp_cmd->add_option("--json", cmp.json_out, "Also write the table as JSON");
  cmp_cmd->add_option("--jobs", cmp.jobs)->check(CLI::PositiveNumber);

  std::string export_in, export_out;
  auto* exp_cmd = app.add_subcommand("export", "Convert a trace to Chrome trace JSON");
  exp_cmd->add_option("trace", export_in)->required();
  exp_cmd->add_option("-o,--out", export_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*prof_cmd) return run_profile(prof);
    if (*tune_cmd) return run_tune(tune);
    if (*sched_cmd) return run_schedule(sched);
    if (*cmp_cmd) return run_compare(cmp);
    if (*exp_cmd) return run_export(export_in, export_out);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const UnderdeterminedError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::critical("internal error: {}", e.what());
    return kExitInternal;
  }
  return kExitUsage;
}
