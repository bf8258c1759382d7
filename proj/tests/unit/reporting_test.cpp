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

#include <gtest/gtest.h>

#include "json.hpp"
#include "opsched/errors.hpp"
#include "trace_checks.hpp"

namespace opsched {
namespace {

ScheduleTrace make_trace(std::vector<ScheduleEvent> events, int cores = 68) {
  ScheduleTrace t;
  t.machine.physical_cores = cores;
  t.events = std::move(events);
  double first = t.events.empty() ? 0.0 : t.events[0].start;
  double last = 0.0;
  for (const auto& e : t.events) {
    first = std::min(first, e.start);
    last = std::max(last, e.end);
  }
  t.makespan = last - first;
  t.graph_digest = "g";
  return t;
}

std::vector<int> range(int from, int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = from + i;
  return v;
}

TEST(CorunStats, SingleOp) {
  const auto s = corun_stats(make_trace({{"a", 0, 5, 68, range(0, 68), false, 0}}));
  EXPECT_EQ(s.series, (std::vector<std::pair<double, int>>{{0, 1}, {5, 0}}));
  EXPECT_DOUBLE_EQ(s.mean, 0.5);
}

TEST(CorunStats, TwoOverlappingOps) {
  const auto s = corun_stats(make_trace(
      {{"a", 0, 5, 34, range(0, 34), false, 0}, {"b", 0, 5, 34, range(34, 34), false, 0}}));
  EXPECT_EQ(s.series.size(), 4u);
  EXPECT_DOUBLE_EQ(s.mean, 1.0);
}

TEST(CorunStats, WindowKeepsTheMiddle) {
  std::vector<ScheduleEvent> ev;
  for (int i = 0; i < 5; ++i) ev.push_back({"op" + std::to_string(i), i * 1.0, i + 1.0, 1, {0}, false, 0});
  const auto all = corun_stats(make_trace(ev));
  ASSERT_EQ(all.series.size(), 10u);
  const auto mid = corun_stats(make_trace(ev), 4);
  ASSERT_EQ(mid.series.size(), 4u);
  EXPECT_EQ(mid.series.front(), all.series[3]);
  EXPECT_EQ(corun_stats(make_trace(ev), 50).series.size(), 10u);
}

// Brute force: at each launch and finish, count the ops whose interval
// [start, end) contains that instant.
TEST(CorunStats, MatchesBruteForceOnRandomTraces) {
  Rng rng(12);
  for (int round = 0; round < 300; ++round) {
    std::vector<ScheduleEvent> ev;
    const int n = static_cast<int>(rng.uniform_int(1, 20));
    for (int i = 0; i < n; ++i) {
      // Coarse times so that shared instants are common.
      const double s = static_cast<double>(rng.uniform_int(0, 10));
      const double d = static_cast<double>(rng.uniform_int(1, 5));
      ev.push_back({"op" + std::to_string(i), s, s + d, 1, {0}, false, 0});
    }
    const auto t = make_trace(ev);
    double sum = 0.0;
    for (const auto& e : ev) {
      for (double at : {e.start, e.end}) {
        int live = 0;
        for (const auto& o : ev) live += o.start <= at && at < o.end;
        sum += live;
      }
    }
    EXPECT_NEAR(corun_stats(t).mean, sum / (2.0 * n), 1e-12);
  }
}

TEST(Utilization, FullMachineSingleOpIsOne) {
  EXPECT_DOUBLE_EQ(utilization(make_trace({{"a", 0, 5, 68, range(0, 68), false, 0}})), 1.0);
  EXPECT_DOUBLE_EQ(utilization(make_trace({{"a", 0, 5, 34, range(0, 34), false, 0}})), 0.5);
  EXPECT_EQ(utilization(make_trace({})), 0.0);
}

TEST(Utilization, WithinUnitIntervalOnSimulatedRuns) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto fc = testing::make_fuzz_case(seed);
    const double u = utilization(simulate(fc.graph, fc.machine, fc.tuned, fc.config));
    EXPECT_GT(u, 0.0);
    EXPECT_LE(u, 1.0);
  }
}

TEST(Compare, SelfIsSpeedupOne) {
  const auto t = make_trace({{"a", 0, 5, 68, range(0, 68), false, 0}});
  const std::vector<NamedTrace> traces{{"x", t}, {"y", t}};
  const auto rows = compare(traces);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[1].speedup, 1.0);
}

TEST(Compare, PairSerialVersusPartitioned) {
  const auto serial = make_trace({{"a", 0, 20.55, 68, range(0, 68), false, 0},
                                  {"b", 20.55, 41.1, 68, range(0, 68), false, 0}});
  const auto split = make_trace(
      {{"a", 0, 29.8, 34, range(0, 34), false, 0}, {"b", 0, 29.8, 34, range(34, 34), false, 0}});
  const std::vector<NamedTrace> traces{{"serial", serial}, {"corun", split}};
  const auto rows = compare(traces);
  EXPECT_NEAR(rows[1].speedup, 1.38, 0.005);
  EXPECT_DOUBLE_EQ(rows[1].speedup, rows[0].makespan / rows[1].makespan);
  const auto text = format_comparison(rows);
  EXPECT_NE(text.find("corun"), std::string::npos);
  EXPECT_NE(text.find("1.379"), std::string::npos);
}

TEST(Compare, MismatchedInputsAreRejected) {
  auto a = make_trace({{"a", 0, 5, 1, {0}, false, 0}});
  auto b = a;
  b.graph_digest = "other";
  EXPECT_THROW(compare(std::vector<NamedTrace>{{"a", a}, {"b", b}}), ConfigError);
  b = a;
  b.machine.physical_cores = 8;
  EXPECT_THROW(compare(std::vector<NamedTrace>{{"a", a}, {"b", b}}), ConfigError);
}

TEST(MakeReport, SpeedupsAgainstBaselines) {
  const auto base = make_trace({{"a", 0, 10, 1, {0}, false, 0}});
  const auto fast = make_trace({{"a", 0, 4, 1, {0}, false, 0}});
  const auto r = make_report(fast, {{"baseline_1x68", &base}});
  EXPECT_DOUBLE_EQ(r.speedup_vs.at("baseline_1x68"), 2.5);
  EXPECT_DOUBLE_EQ(r.makespan, 4.0);
}

TEST(ChromeTrace, EmptyTrace) {
  EXPECT_EQ(export_chrome_trace(make_trace({})), "[]");
}

TEST(ChromeTrace, SingleEventInMicroseconds) {
  const auto t = make_trace({{"a", 0, 100.0 / 68, 68, range(0, 68), false, 0}});
  const auto j = nlohmann::json::parse(export_chrome_trace(t));
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["ph"], "X");
  EXPECT_EQ(j[0]["ts"].get<double>(), 0.0);
  EXPECT_NEAR(j[0]["dur"].get<double>(), 1470.6, 0.05);
  EXPECT_EQ(j[0]["tid"], 0);
  EXPECT_EQ(j[0]["args"]["width"], 68);
}

TEST(ChromeTrace, ReparseKeepsEveryEvent) {
  const auto fc = testing::make_fuzz_case(9);
  const auto t = simulate(fc.graph, fc.machine, fc.tuned, fc.config);
  const auto j = nlohmann::json::parse(export_chrome_trace(t));
  ASSERT_EQ(j.size(), t.events.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = t.events[i];
    EXPECT_EQ(j[i]["name"], e.op_id);
    EXPECT_NEAR(j[i]["ts"].get<double>(), e.start * 1000.0, 1e-6);
    EXPECT_NEAR(j[i]["dur"].get<double>(), (e.end - e.start) * 1000.0, 1e-6);
    EXPECT_EQ(j[i]["tid"], *std::min_element(e.cores.begin(), e.cores.end()));
    EXPECT_EQ(j[i]["args"]["shared"], e.shared);
    EXPECT_EQ(j[i]["args"]["cores"].size(), e.cores.size());
  }
}

}  // namespace
}  // namespace opsched
