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

#include <gtest/gtest.h>

#include <array>
#include <string>

#include "opsched/graph.hpp"
#include "opsched/io.hpp"
#include "opsched/perf_model.hpp"
#include "opsched/profiler.hpp"
#include "opsched/reporting.hpp"
#include "opsched/scheduler.hpp"

namespace opsched {
namespace {

DataflowGraph load(const std::string& name) {
  return parse_graph(io::read_file(std::string(OPSCHED_FIXTURE_DIR) + "/" + name + ".json"));
}

struct Pinned {
  std::string name;
  std::size_t ops;
  std::array<double, 4> makespan;  // baseline 1x68, +S1S2, +S3, +S4
  std::array<double, 4> corun;
};

class FixtureAblation : public ::testing::TestWithParam<Pinned> {};

TEST_P(FixtureAblation, MatchesPinnedRun) {
  const auto& p = GetParam();
  const auto g = load(p.name);
  ASSERT_EQ(g.size(), p.ops);
  TunedTable tuned;
  for (const auto& [key, curve] : distinct_keys(g)) {
    tuned.emplace(key, tune_op(key, curve, TunerConfig::defaults(68)));
  }
  auto c = StrategyConfig::baseline(1, 68);
  for (int k = 0; k < 4; ++k) {
    if (k == 1) c.avoid_width_change = c.per_op_width = true;
    if (k == 2) c.corun = true;
    if (k == 3) c.hyperthread = true;
    const auto t = simulate(g, MachineModel{}, tuned, c);
    EXPECT_NEAR(t.makespan, p.makespan[k], 1e-9 * p.makespan[k]) << "config " << k;
    EXPECT_NEAR(corun_stats(t).mean, p.corun[k], 1e-12) << "config " << k;
  }
}

// Serial full-width execution: the makespan is the sum of every op's T(68).
TEST_P(FixtureAblation, BaselineIsSumOfFullWidthTimes) {
  const auto g = load(GetParam().name);
  double sum = 0.0;
  for (const auto& n : g.nodes()) sum += exec_time(n.cost, 68);
  EXPECT_NEAR(simulate(g, MachineModel{}, {}, StrategyConfig::baseline(1, 68)).makespan, sum,
              1e-9 * sum);
}

INSTANTIATE_TEST_SUITE_P(
    Models, FixtureAblation,
    ::testing::Values(
        Pinned{"resnet_like", 113,
               {2185.905811677161, 1363.5110510214622, 958.9980193837278, 946.5753192075971},
               {0.995575221238938, 0.995575221238938, 1.8407079646017699, 2.0265486725663715}},
        Pinned{"dcgan_like", 36,
               {657.9176494353584, 410.8974528076073, 268.998185559489, 258.64769970422816},
               {0.9861111111111112, 0.9861111111111112, 2.138888888888889, 2.1666666666666665}},
        Pinned{"inception_like", 43,
               {725.5472707674667, 435.3264841540611, 322.8111073120399, 320.13270428333965},
               {0.9883720930232558, 0.9883720930232558, 1.941860465116279, 2.011627906976744}},
        Pinned{"lstm_like", 49,
               {159.71104789816363, 101.61824738100574, 81.1688663015685, 81.1688663015685},
               {0.9897959183673469, 0.9897959183673469, 1.4795918367346939, 1.4795918367346939}}),
    [](const auto& info) { return info.param.name; });

TEST(TablePair, CalibratedTimes) {
  const auto g = load("table3_pair");
  ASSERT_EQ(g.size(), 2u);
  for (const auto& n : g.nodes()) {
    EXPECT_NEAR(exec_time(n.cost, 68), 20.55, 1e-9);
    EXPECT_NEAR(exec_time(n.cost, 34), 29.8, 1e-9);
    EXPECT_EQ(optimal_width(n.cost, 68), 68);
  }
}

TEST(ResnetLike, ProfilingCostIsSmall) {
  const auto g = load("resnet_like");
  std::vector<ProfileHistory> hs;
  for (const auto& [key, curve] : distinct_keys(g)) {
    hs.push_back(tune_op(key, curve, TunerConfig::defaults(68)).history);
  }
  double sampled = 0.0;
  for (const auto& h : hs) sampled += h.total_sampled_ms();
  const double step = 946.5753192075971;
  EXPECT_DOUBLE_EQ(profiling_cost(hs, 10000, step), sampled / (sampled + 10000 * step));
  EXPECT_LT(profiling_cost(hs, 10000, step), 0.0005);
}

TEST(KnlMachine, Defaults) {
  EXPECT_EQ(io::parse_machine(io::read_file(std::string(OPSCHED_FIXTURE_DIR) + "/knl.json")),
            MachineModel{});
}

}  // namespace
}  // namespace opsched
