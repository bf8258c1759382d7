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

// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "opsched/cost_model.hpp"
#include "opsched/graph.hpp"
#include "opsched/io.hpp"
#include "opsched/perf_model.hpp"
#include "opsched/profiler.hpp"
#include "opsched/reporting.hpp"
#include "opsched/rng.hpp"
#include "opsched/scheduler.hpp"
#include "trace_checks.hpp"

namespace fs = std::filesystem;
using namespace opsched;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string fixture(const std::string& name) { return std::string(OPSCHED_FIXTURE_DIR) + "/" + name; }

DataflowGraph load_graph(const std::string& name) {
  return parse_graph(io::read_file(fixture(name + ".json")));
}

TunedTable tune_all(const DataflowGraph& g, std::vector<ProfileHistory>* histories = nullptr) {
  TunedTable table;
  for (const auto& [key, curve] : distinct_keys(g)) {
    auto t = tune_op(key, curve, TunerConfig::defaults(68));
    if (histories) histories->push_back(t.history);
    table.emplace(key, std::move(t));
  }
  return table;
}

std::function<double(int)> oracle(const CostCurve& c) {
  return [c](int w) { return exec_time(c, w); };
}

CostCurve random_curve(Rng& rng) {
  return {rng.uniform(0, 10), rng.uniform(10, 1000), rng.uniform(0.01, 2)};
}

Outcome table_pair() {
  const auto g = load_graph("table3_pair");
  const MachineModel knl{};
  const auto tuned = tune_all(g);
  const double serial = simulate(g, knl, tuned, StrategyConfig::baseline(1, 68)).makespan;
  auto corun_cfg = StrategyConfig::all_strategies(68);
  corun_cfg.hyperthread = false;
  const double corun = simulate(g, knl, tuned, corun_cfg).makespan;
  auto ht_cfg = StrategyConfig::baseline(2, 68);
  ht_cfg.hyperthread = true;
  const double ht = simulate(g, knl, tuned, ht_cfg).makespan;
  const double speedup = serial / corun;
  const double ht_speedup = serial / ht;
  const bool pass = std::abs(serial - 41.1) < 1e-6 && std::abs(corun - 29.8) < 1e-6 &&
                    std::abs(speedup - 1.38) <= 0.005 && std::abs(ht_speedup - 1.03) <= 0.01;
  return {pass, fmt("serial %.4f, co-run %.4f, speedup %.4f, hyper-thread %.4f (speedup %.4f)",
                    serial, corun, speedup, ht, ht_speedup)};
}

Outcome tuner_exactness() {
  Rng rng(2024);
  const auto cfg = TunerConfig::defaults(68);
  int exact = 0;
  int within = 0;
  long evals = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const auto curve = random_curve(rng);
    const auto t = hill_climb(oracle(curve), cfg);
    const int truth = optimal_width(curve, 68);
    exact += t.width == truth;
    within += std::abs(t.width - truth) <= cfg.min_step;
    evals += t.evaluations;
  }
  const double mean_evals = static_cast<double>(evals) / n;
  return {exact >= 950 && within == n && mean_evals <= 20.0,
          fmt("exact %d/%d, within one step %d/%d, mean evaluations %.2f", exact, n, within, n,
              mean_evals)};
}

// Held-out widths are every width the tuner did not measure.
std::vector<int> held_out(const ProfileHistory& h) {
  std::vector<int> held;
  for (int w = 1; w <= 68; ++w) {
    if (!h.samples.contains(w)) held.push_back(w);
  }
  return held;
}

Outcome predictor_accuracy() {
  Rng rng(2025);
  double total = 0.0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const auto curve = random_curve(rng);
    const auto t = tune_op({"Op", {i}}, curve, TunerConfig::defaults(68));
    total += accuracy([&](int w) { return predict(t.history, w); }, curve, held_out(t.history));
  }
  const double mean_err = total / n;

  Rng het(404);
  std::vector<ProfileHistory> histories;
  std::vector<CostCurve> curves;
  for (int i = 0; i < 10; ++i) {
    const auto c = random_curve(het);
    histories.push_back(tune_op({"Op" + std::to_string(i), {32, 8 + i, 8, 384}}, c,
                                TunerConfig::defaults(68))
                            .history);
    curves.push_back(c);
  }
  const auto model = fit_regression(regression_rows(histories));
  double hist_err = 0.0;
  double reg_err = 0.0;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto held = held_out(histories[i]);
    const double work = histories[i].key.work_proxy();
    hist_err += accuracy([&](int w) { return predict(histories[i], w); }, curves[i], held);
    reg_err += accuracy([&](int w) { return model.predict(w, work); }, curves[i], held);
  }
  hist_err /= static_cast<double>(curves.size());
  reg_err /= static_cast<double>(curves.size());
  return {mean_err <= 0.05 && hist_err < reg_err,
          fmt("mean held-out error %.4f; heterogeneous set: history %.4f vs regression %.4f",
              mean_err, hist_err, reg_err)};
}

struct Ablation {
  double makespan[4];
  double corun[4];
  std::vector<ProfileHistory> histories;
};

Ablation run_ablation(const std::string& name) {
  const auto g = load_graph(name);
  Ablation a{};
  const auto tuned = tune_all(g, &a.histories);
  auto c = StrategyConfig::baseline(1, 68);
  for (int k = 0; k < 4; ++k) {
    if (k == 1) c.avoid_width_change = c.per_op_width = true;
    if (k == 2) c.corun = true;
    if (k == 3) c.hyperthread = true;
    const auto t = simulate(g, MachineModel{}, tuned, c);
    a.makespan[k] = t.makespan;
    a.corun[k] = corun_stats(t).mean;
  }
  return a;
}

const std::vector<std::string> kModels{"resnet_like", "dcgan_like", "inception_like", "lstm_like"};

Outcome ablation(const std::map<std::string, Ablation>& runs) {
  bool pass = true;
  std::ostringstream out;
  for (const auto& name : kModels) {
    const auto& m = runs.at(name).makespan;
    const bool mono = m[0] >= m[1] && m[1] >= m[2] && m[2] >= m[3];
    pass = pass && mono;
    out << name << " " << fmt("%.1f/%.1f/%.1f/%.1f", m[0], m[1], m[2], m[3]) << (mono ? "" : " (not monotone)")
        << "; ";
  }
  const auto& r = runs.at("resnet_like").makespan;
  const double gain = 1.0 - r[3] / r[0];
  const auto& l = runs.at("lstm_like").makespan;
  const double lstm_s4 = std::abs(l[2] - l[3]) / l[2];
  pass = pass && gain >= 0.20 && lstm_s4 <= 0.01;
  out << fmt("resnet gain %.3f, lstm S4 change %.4f", gain, lstm_s4);
  return {pass, out.str()};
}

Outcome corun_accounting(const std::map<std::string, Ablation>& runs) {
  bool pass = true;
  std::ostringstream out;
  for (const auto& name : {"resnet_like", "dcgan_like", "inception_like"}) {
    const auto& c = runs.at(name).corun;
    pass = pass && c[3] > c[2];
    out << (out.tellp() > 0 ? "; " : "") << name << fmt(" %.3f -> %.3f", c[2], c[3]);
  }
  return {pass, out.str()};
}

Outcome fuzz_safety() {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 10000;
  int violations = 0;
  std::string first;
  for (int seed = 0; seed < n; ++seed) {
    const auto fc = testing::make_fuzz_case(static_cast<std::uint64_t>(seed));
    const auto bad = testing::check_trace(fc.graph, simulate(fc.graph, fc.machine, fc.tuned, fc.config));
    if (!bad.empty()) {
      if (violations == 0) first = "seed " + std::to_string(seed) + ": " + bad.front();
      ++violations;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {violations == 0 && secs < 60.0,
          fmt("%d runs, %d with violations, %.1f s", n, violations, secs) +
              (first.empty() ? "" : " (" + first + ")")};
}

int run(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

// Runs every command into `dir`; returns the failing command or "".
std::string cli_round(const fs::path& dir) {
  fs::create_directories(dir);
  const std::string cli = OPSCHED_CLI;
  const std::string d = dir.string();
  const std::string machine = fixture("knl.json");
  const std::vector<std::string> cmds{
      cli + " gen --pattern resnet_block --depth 4 --fanout 3 --seed 7 -o " + d + "/graph.json",
      cli + " profile --graph " + d + "/graph.json --machine " + machine +
          " --widths 1 8 34 68 --repeats 5 --noise-sigma 0.05 --seed 3 -o " + d + "/profile.json",
      cli + " tune --graph " + d + "/graph.json --machine " + machine +
          " --repeats 3 --noise-sigma 0.05 --seed 3 -o " + d + "/tuned.json",
      cli + " schedule --graph " + d + "/graph.json --machine " + machine + " --tuned " + d +
          "/tuned.json --ablation --jobs 2 -o " + d + "/ablation",
      cli + " schedule --graph " + d + "/graph.json --machine " + machine + " --profile " + d +
          "/profile.json --s1 --s3 --s4 -o " + d + "/profiled",
      cli + " compare " + d + "/ablation/baseline_1x68.trace.json " + d +
          "/ablation/s1s2s3s4.trace.json --json " + d + "/compare.json",
      cli + " export " + d + "/ablation/s1s2s3.trace.json -o " + d + "/chrome.json"};
  for (const auto& c : cmds) {
    if (run(c) != 0) return c;
  }
  return "";
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / ("opsched_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  for (const char* round : {"a", "b"}) {
    const auto failed = cli_round(root / round);
    if (!failed.empty()) {
      fs::remove_all(root);
      return {false, "command failed: " + failed};
    }
  }
  int files = 0;
  std::string diff;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root / "a");
    ++files;
    const auto other = root / "b" / rel;
    if (!fs::exists(other) || io::read_file(entry.path().string()) != io::read_file(other.string())) {
      diff = rel.string();
      break;
    }
  }
  fs::remove_all(root);
  return {diff.empty() && files > 0,
          diff.empty() ? fmt("%d output files identical across two runs", files) : "differs: " + diff};
}

Outcome profiling_overhead(const std::map<std::string, Ablation>& runs) {
  const auto& a = runs.at("resnet_like");
  const double cost = profiling_cost(a.histories, 10000, a.makespan[3]);
  return {cost < 0.0005, fmt("profiling cost %.6f of 10000 steps at %.1f ms", cost, a.makespan[3])};
}

}  // namespace

int main() {
  std::map<std::string, Ablation> runs;
  for (const auto& name : kModels) runs.emplace(name, run_ablation(name));

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"paired co-run and hyper-thread speedups", table_pair},
      {"tuner exactness", tuner_exactness},
      {"predictor accuracy", predictor_accuracy},
      {"strategy ablation monotonicity", [&] { return ablation(runs); }},
      {"co-run accounting", [&] { return corun_accounting(runs); }},
      {"safety under fuzzing", fuzz_safety},
      {"CLI determinism", cli_determinism},
      {"profiling overhead", [&] { return profiling_overhead(runs); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
