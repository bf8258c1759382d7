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

#include "opsched/graph.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "opsched/errors.hpp"

namespace opsched {

using nlohmann::json;

void OpKey::validate() const {
  if (op_type.empty()) throw std::invalid_argument("op type must be non-empty");
  if (signature.empty()) throw std::invalid_argument("signature must be non-empty");
  for (auto d : signature) {
    if (d < 1) throw std::invalid_argument("signature entries must be >= 1");
  }
}

double OpKey::work_proxy() const {
  double w = 1.0;
  for (auto d : signature) w *= static_cast<double>(d);
  return w;
}

std::string OpKey::to_string() const {
  std::string out = op_type + "(";
  for (std::size_t i = 0; i < signature.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(signature[i]);
  }
  return out + ")";
}

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out = "{";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  return out + "}";
}

// Returns the node ids on one cycle of the subgraph induced by `stuck`.
std::vector<std::string> find_cycle(const std::vector<OpNode>& nodes,
                                    const std::vector<std::vector<std::size_t>>& consumers,
                                    const std::vector<bool>& stuck) {
  enum class Mark { white, grey, black };
  std::vector<Mark> mark(nodes.size(), Mark::white);
  std::vector<std::size_t> stack;
  std::vector<std::string> cycle;

  std::function<bool(std::size_t)> dfs = [&](std::size_t u) {
    mark[u] = Mark::grey;
    stack.push_back(u);
    for (auto v : consumers[u]) {
      if (!stuck[v]) continue;
      if (mark[v] == Mark::grey) {
        auto it = std::find(stack.begin(), stack.end(), v);
        for (; it != stack.end(); ++it) cycle.push_back(nodes[*it].id);
        return true;
      }
      if (mark[v] == Mark::white && dfs(v)) return true;
    }
    stack.pop_back();
    mark[u] = Mark::black;
    return false;
  };
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (stuck[i] && mark[i] == Mark::white && dfs(i)) break;
  }
  std::sort(cycle.begin(), cycle.end());
  return cycle;
}

}  // namespace

DataflowGraph DataflowGraph::build(std::vector<OpNode> nodes, std::vector<Edge> edges) {
  DataflowGraph g;
  std::sort(nodes.begin(), nodes.end(),
            [](const OpNode& a, const OpNode& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.id.empty()) throw ValidationError("op with empty id");
    if (i > 0 && nodes[i - 1].id == n.id) throw ValidationError("duplicate op id '" + n.id + "'");
    try {
      n.key.validate();
      n.cost.validate();
    } catch (const std::invalid_argument& e) {
      throw ValidationError("op '" + n.id + "': " + e.what());
    }
    g.index_.emplace(n.id, i);
  }

  std::sort(edges.begin(), edges.end());
  g.producers_.resize(nodes.size());
  g.consumers_.resize(nodes.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& [from, to] = edges[i];
    if (from == to) throw ValidationError("self-edge on " + from);
    if (i > 0 && edges[i - 1] == edges[i]) {
      throw ValidationError("duplicate edge " + from + " -> " + to);
    }
    auto pf = g.index_.find(from);
    auto pt = g.index_.find(to);
    if (pf == g.index_.end()) {
      throw ValidationError("dangling edge " + from + " -> " + to + ": unknown op '" + from + "'");
    }
    if (pt == g.index_.end()) {
      throw ValidationError("dangling edge " + from + " -> " + to + ": unknown op '" + to + "'");
    }
    g.consumers_[pf->second].push_back(pt->second);
    g.producers_[pt->second].push_back(pf->second);
  }

  // Kahn's algorithm; whatever is left over sits on or behind a cycle.
  std::vector<std::size_t> indegree(nodes.size());
  std::vector<std::size_t> queue;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    indegree[i] = g.producers_[i].size();
    if (indegree[i] == 0) queue.push_back(i);
  }
  std::size_t visited = 0;
  while (!queue.empty()) {
    auto u = queue.back();
    queue.pop_back();
    ++visited;
    for (auto v : g.consumers_[u]) {
      if (--indegree[v] == 0) queue.push_back(v);
    }
  }
  if (visited != nodes.size()) {
    std::vector<bool> stuck(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) stuck[i] = indegree[i] > 0;
    throw ValidationError("cycle among " + join_ids(find_cycle(nodes, g.consumers_, stuck)));
  }

  g.nodes_ = std::move(nodes);
  g.edges_ = std::move(edges);
  return g;
}

std::size_t DataflowGraph::index_of(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown op id '" + std::string(id) + "'");
  return it->second;
}

bool DataflowGraph::contains(std::string_view id) const { return index_.find(id) != index_.end(); }

namespace {

const json& require(const json& obj, const char* field, const std::string& where) {
  if (!obj.is_object() || !obj.contains(field)) {
    throw ParseError(where + ": missing field '" + field + "'");
  }
  return obj.at(field);
}

double require_number(const json& obj, const char* field, const std::string& where) {
  const auto& v = require(obj, field, where);
  if (!v.is_number()) throw ParseError(where + "." + field + ": expected a number");
  return v.get<double>();
}

}  // namespace

DataflowGraph parse_graph(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("graph: expected a JSON object");

  const auto& ops = require(doc, "ops", "graph");
  if (!ops.is_array()) throw ParseError("graph.ops: expected an array");
  std::vector<OpNode> nodes;
  nodes.reserve(ops.size());
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const std::string where = "ops[" + std::to_string(i) + "]";
    const auto& op = ops[i];
    OpNode node;
    const auto& id = require(op, "id", where);
    const auto& type = require(op, "type", where);
    if (!id.is_string()) throw ParseError(where + ".id: expected a string");
    if (!type.is_string()) throw ParseError(where + ".type: expected a string");
    node.id = id.get<std::string>();
    node.key.op_type = type.get<std::string>();
    const auto& sig = require(op, "signature", where);
    if (!sig.is_array()) throw ParseError(where + ".signature: expected an array");
    for (const auto& d : sig) {
      if (!d.is_number_integer()) throw ParseError(where + ".signature: expected integers");
      node.key.signature.push_back(d.get<std::int64_t>());
    }
    const auto& cost = require(op, "cost", where);
    node.cost.serial = require_number(cost, "t_s", where + ".cost");
    node.cost.work = require_number(cost, "t_w", where + ".cost");
    node.cost.spawn_overhead = require_number(cost, "c", where + ".cost");
    nodes.push_back(std::move(node));
  }

  std::vector<Edge> edges;
  if (doc.contains("edges")) {
    const auto& es = doc.at("edges");
    if (!es.is_array()) throw ParseError("graph.edges: expected an array");
    for (std::size_t i = 0; i < es.size(); ++i) {
      const auto& e = es[i];
      if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
        throw ParseError("edges[" + std::to_string(i) + "]: expected [\"producer\", \"consumer\"]");
      }
      edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
  }
  return DataflowGraph::build(std::move(nodes), std::move(edges));
}

std::string serialize_graph(const DataflowGraph& graph) {
  json ops = json::array();
  for (const auto& n : graph.nodes()) {
    ops.push_back({{"id", n.id},
                   {"type", n.key.op_type},
                   {"signature", n.key.signature},
                   {"cost",
                    {{"t_s", n.cost.serial}, {"t_w", n.cost.work}, {"c", n.cost.spawn_overhead}}}});
  }
  json edges = json::array();
  for (const auto& [from, to] : graph.edges()) edges.push_back({from, to});
  json doc = {{"ops", ops}, {"edges", edges}};
  return doc.dump(1) + "\n";
}

std::string graph_digest(const DataflowGraph& graph) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : serialize_graph(graph)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::vector<std::string> ready_set(const DataflowGraph& graph,
                                   const std::set<std::string>& completed) {
  std::vector<bool> done(graph.size(), false);
  for (const auto& id : completed) {
    if (!graph.contains(id)) throw ConsistencyError("completed set names unknown op '" + id + "'");
    done[graph.index_of(id)] = true;
  }
  std::vector<std::string> ready;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto& prods = graph.producers(i);
    const bool deps_done =
        std::all_of(prods.begin(), prods.end(), [&](std::size_t p) { return done[p]; });
    if (done[i]) {
      if (!deps_done) {
        throw ConsistencyError("op '" + graph.nodes()[i].id +
                               "' is completed before one of its producers");
      }
    } else if (deps_done) {
      ready.push_back(graph.nodes()[i].id);
    }
  }
  return ready;
}

std::map<OpKey, CostCurve> distinct_keys(const DataflowGraph& graph) {
  std::map<OpKey, CostCurve> keys;
  for (const auto& n : graph.nodes()) {
    auto [it, inserted] = keys.emplace(n.key, n.cost);
    if (!inserted && !(it->second == n.cost)) {
      throw ValidationError("op '" + n.id + "' has key " + n.key.to_string() +
                            " with a cost curve that differs from an earlier instance");
    }
  }
  return keys;
}

}  // namespace opsched
