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

#include "opsched/io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "opsched/errors.hpp"

namespace opsched::io {

using nlohmann::json;

namespace {

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": syntax error at byte " + std::to_string(e.byte));
  }
}

// Runs `fn`, turning nlohmann type/range errors into ParseError.
template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

json key_json(const OpKey& key) { return {{"type", key.op_type}, {"signature", key.signature}}; }

OpKey key_from(const json& j) {
  OpKey k{j.at("type").get<std::string>(), j.at("signature").get<std::vector<std::int64_t>>()};
  try {
    k.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(k.op_type + ": " + e.what());
  }
  return k;
}

json strategy_json(const StrategyConfig& c) {
  return {{"s1", c.avoid_width_change}, {"s2", c.per_op_width},
          {"s3", c.corun},              {"s4", c.hyperthread},
          {"delta", c.reconfig_delta},  {"min_useful_width", c.min_useful_width},
          {"uniform_intra", c.uniform_intra}, {"uniform_inter", c.uniform_inter},
          {"eta", c.eta}};
}

StrategyConfig strategy_from(const json& j, StrategyConfig c) {
  if (!j.is_object()) throw ParseError("strategy: expected a JSON object");
  c.avoid_width_change = j.value("s1", c.avoid_width_change);
  c.per_op_width = j.value("s2", c.per_op_width);
  c.corun = j.value("s3", c.corun);
  c.hyperthread = j.value("s4", c.hyperthread);
  c.reconfig_delta = j.value("delta", c.reconfig_delta);
  c.min_useful_width = j.value("min_useful_width", c.min_useful_width);
  c.uniform_intra = j.value("uniform_intra", c.uniform_intra);
  c.uniform_inter = j.value("uniform_inter", c.uniform_inter);
  c.eta = j.value("eta", c.eta);
  return c;
}

json machine_json(const MachineModel& m) {
  return {{"physical_cores", m.physical_cores},
          {"hw_threads_per_core", m.hw_threads_per_core},
          {"max_corun_per_core", m.max_corun_per_core}};
}

MachineModel machine_from(const json& j) {
  if (!j.is_object()) throw ParseError("machine: expected a JSON object");
  MachineModel m;
  m.physical_cores = j.value("physical_cores", m.physical_cores);
  m.hw_threads_per_core = j.value("hw_threads_per_core", m.hw_threads_per_core);
  m.max_corun_per_core = j.value("max_corun_per_core", m.max_corun_per_core);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("machine: ") + e.what());
  }
  return m;
}

Range range_from(const json& j) {
  if (j.is_number()) return {j.get<double>(), j.get<double>()};
  if (!j.is_array() || j.size() != 2) throw ParseError("op mix range: expected [min, max]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

MachineModel parse_machine(std::string_view text) {
  const json j = parse_json(text, "machine");
  return guarded("machine", [&] { return machine_from(j); });
}

std::string serialize_machine(const MachineModel& machine) {
  return machine_json(machine).dump(1) + "\n";
}

StrategyConfig parse_strategy(std::string_view text, StrategyConfig defaults) {
  const json j = parse_json(text, "strategy");
  return guarded("strategy", [&] { return strategy_from(j, defaults); });
}

std::string serialize_strategy(const StrategyConfig& config) {
  return strategy_json(config).dump(1) + "\n";
}

TunedTable parse_tuned_table(std::string_view text) {
  const json j = parse_json(text, "tuned table");
  return guarded("tuned table", [&] {
    if (!j.is_array()) throw ParseError("tuned table: expected a JSON array");
    TunedTable table;
    for (const auto& row : j) {
      TunedWidth t;
      t.key = key_from(row);
      t.width = row.at("width").get<int>();
      t.predicted_ms = row.at("predicted_ms").get<double>();
      t.evaluations = row.value("evaluations", 0);
      t.history.key = t.key;
      if (row.contains("history")) {
        for (const auto& s : row.at("history")) {
          t.history.samples[s.at(0).get<int>()] = s.at(1).get<double>();
        }
      }
      if (t.width < 1) throw ValidationError(t.key.to_string() + ": tuned width must be >= 1");
      if (!table.emplace(t.key, t).second) {
        throw ValidationError("tuned table lists " + t.key.to_string() + " twice");
      }
    }
    return table;
  });
}

std::string serialize_tuned_table(const TunedTable& table) {
  json rows = json::array();
  for (const auto& [key, t] : table) {
    json row = key_json(key);
    row["width"] = t.width;
    row["predicted_ms"] = t.predicted_ms;
    row["evaluations"] = t.evaluations;
    json hist = json::array();
    for (const auto& [w, ms] : t.history.samples) hist.push_back({w, ms});
    row["history"] = hist;
    rows.push_back(std::move(row));
  }
  return rows.dump(1) + "\n";
}

std::vector<ProfileHistory> parse_profile_store(std::string_view text) {
  const json j = parse_json(text, "profile store");
  return guarded("profile store", [&] {
    if (!j.is_array()) throw ParseError("profile store: expected a JSON array");
    std::vector<ProfileHistory> out;
    for (const auto& row : j) {
      ProfileHistory h;
      h.key = key_from(row);
      h.repeats = row.value("repeats", 1);
      h.noise_sigma = row.value("noise_sigma", 0.0);
      h.seed = row.value("seed", std::uint64_t{0});
      const auto widths = row.at("widths").get<std::vector<int>>();
      const auto medians = row.at("medians").get<std::vector<double>>();
      if (widths.size() != medians.size()) {
        throw ValidationError(h.key.to_string() + ": widths and medians differ in length");
      }
      for (std::size_t i = 0; i < widths.size(); ++i) {
        if (widths[i] < 1 || !(medians[i] > 0.0)) {
          throw ValidationError(h.key.to_string() + ": samples need width >= 1 and time > 0");
        }
        h.samples[widths[i]] = medians[i];
      }
      out.push_back(std::move(h));
    }
    return out;
  });
}

std::string serialize_profile_store(std::span<const ProfileHistory> histories) {
  json rows = json::array();
  for (const auto& h : histories) {
    json row = key_json(h.key);
    row["repeats"] = h.repeats;
    row["noise_sigma"] = h.noise_sigma;
    row["seed"] = h.seed;
    std::vector<int> widths;
    std::vector<double> medians;
    for (const auto& [w, ms] : h.samples) {
      widths.push_back(w);
      medians.push_back(ms);
    }
    row["widths"] = widths;
    row["medians"] = medians;
    rows.push_back(std::move(row));
  }
  return rows.dump(1) + "\n";
}

ScheduleTrace parse_trace(std::string_view text) {
  const json j = parse_json(text, "trace");
  return guarded("trace", [&] {
    ScheduleTrace t;
    t.graph_digest = j.at("graph_digest").get<std::string>();
    t.machine = machine_from(j.at("machine"));
    t.strategy = strategy_from(j.at("strategy"), {});
    t.makespan = j.at("makespan").get<double>();
    for (const auto& e : j.at("events")) {
      t.events.push_back({e.at("op").get<std::string>(), e.at("start").get<double>(),
                          e.at("end").get<double>(), e.at("width").get<int>(),
                          e.at("cores").get<std::vector<int>>(), e.at("shared").get<bool>(),
                          e.at("reconfig_penalty").get<double>()});
    }
    for (const auto& d : j.value("decisions", json::array())) {
      t.decisions.push_back(
          {d.at("time").get<double>(), d.at("op").get<std::string>(), d.at("rule").get<std::string>()});
    }
    return t;
  });
}

std::string serialize_trace(const ScheduleTrace& trace) {
  json events = json::array();
  for (const auto& e : trace.events) {
    events.push_back({{"op", e.op_id},
                      {"start", e.start},
                      {"end", e.end},
                      {"width", e.width},
                      {"cores", e.cores},
                      {"shared", e.shared},
                      {"reconfig_penalty", e.reconfig_penalty}});
  }
  json decisions = json::array();
  for (const auto& d : trace.decisions) {
    decisions.push_back({{"time", d.time}, {"op", d.op_id}, {"rule", d.rule}});
  }
  json doc = {{"graph_digest", trace.graph_digest},
              {"machine", machine_json(trace.machine)},
              {"strategy", strategy_json(trace.strategy)},
              {"makespan", trace.makespan},
              {"events", events},
              {"decisions", decisions}};
  return doc.dump(1) + "\n";
}

std::string serialize_report(const RunReport& report) {
  json series = json::array();
  for (const auto& [t, n] : report.corun.series) series.push_back({t, n});
  json doc = {{"makespan", report.makespan},
              {"utilization", report.utilization},
              {"corun_mean", report.corun.mean},
              {"corun_series", series},
              {"speedup_vs", report.speedup_vs}};
  return doc.dump(1) + "\n";
}

std::string serialize_comparison(std::span<const ComparisonRow> rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"name", r.name},
                   {"makespan", r.makespan},
                   {"speedup", r.speedup},
                   {"utilization", r.utilization},
                   {"corun_mean", r.corun_mean}});
  }
  return out.dump(1) + "\n";
}

std::vector<OpMixEntry> parse_op_mix(std::string_view text) {
  const json j = parse_json(text, "op mix");
  return guarded("op mix", [&] {
    if (!j.is_array()) throw ParseError("op mix: expected a JSON array");
    std::vector<OpMixEntry> mix;
    for (const auto& row : j) {
      OpMixEntry e;
      e.key = OpKey{row.at("type").get<std::string>(),
                    row.at("signature").get<std::vector<std::int64_t>>()};
      e.weight = row.value("weight", 1.0);
      e.serial = range_from(row.at("t_s"));
      e.work = range_from(row.at("t_w"));
      e.spawn_overhead = range_from(row.at("c"));
      mix.push_back(std::move(e));
    }
    return mix;
  });
}

}  // namespace opsched::io
