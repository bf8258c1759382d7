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

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "opsched/cost_model.hpp"

namespace opsched {

/// Tuning key of an operation: its type plus the input-size signature. Two
/// instances of the same type with different sizes are tuned separately.
struct OpKey {
  std::string op_type;
  std::vector<std::int64_t> signature;

  auto operator<=>(const OpKey&) const = default;
  bool operator==(const OpKey&) const = default;

  void validate() const;
  // Product of the signature dims, used as a work proxy by the regression model.
  double work_proxy() const;
  // "Conv2D(32,8,8,384)"
  std::string to_string() const;
};

struct OpNode {
  std::string id;
  OpKey key;
  CostCurve cost;

  bool operator==(const OpNode&) const = default;
};

using Edge = std::pair<std::string, std::string>;  // producer, consumer

/// Validated, immutable DAG of operations. Nodes are held in lexicographic id
/// order; that order is the tie-break order everywhere downstream.
class DataflowGraph {
 public:
  DataflowGraph() = default;

  // Validates and builds. Throws ValidationError naming the offending element.
  static DataflowGraph build(std::vector<OpNode> nodes, std::vector<Edge> edges);

  const std::vector<OpNode>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t size() const { return nodes_.size(); }

  // Index into nodes(); throws std::out_of_range for unknown ids.
  std::size_t index_of(std::string_view id) const;
  bool contains(std::string_view id) const;

  const std::vector<std::size_t>& producers(std::size_t i) const { return producers_[i]; }
  const std::vector<std::size_t>& consumers(std::size_t i) const { return consumers_[i]; }

  bool operator==(const DataflowGraph& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_;
  }

 private:
  std::vector<OpNode> nodes_;
  std::vector<Edge> edges_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::vector<std::size_t>> producers_;
  std::vector<std::vector<std::size_t>> consumers_;
};

DataflowGraph parse_graph(std::string_view text);
std::string serialize_graph(const DataflowGraph& graph);

// Stable 64-bit FNV-1a digest of the serialized graph, as 16 hex digits.
std::string graph_digest(const DataflowGraph& graph);

/// Ops not yet completed whose producers are all completed, in id order.
/// Throws ConsistencyError when `completed` names unknown ops or is not
/// dependency-closed.
std::vector<std::string> ready_set(const DataflowGraph& graph,
                                   const std::set<std::string>& completed);

/// Distinct tuning keys with their curve. Throws ValidationError if two nodes
/// share a key but disagree on the curve.
std::map<OpKey, CostCurve> distinct_keys(const DataflowGraph& graph);

enum class GraphPattern { chain, fork_join, resnet_block, inception_block, random_dag };

std::string_view to_string(GraphPattern pattern);
// Throws std::invalid_argument listing the valid pattern names.
GraphPattern parse_pattern(std::string_view name);

struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct OpMixEntry {
  OpKey key;
  double weight = 1.0;
  Range serial;
  Range work;
  Range spawn_overhead;
};

struct GraphGenSpec {
  GraphPattern pattern = GraphPattern::chain;
  int depth = 1;
  int fanout = 1;
  std::vector<OpMixEntry> op_mix;
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<OpMixEntry> default_op_mix();

/// Deterministic synthetic graph. Each op-mix entry draws its curve once, so
/// every instance of a key shares one curve. Node ids are "n0", "n1", ...
DataflowGraph generate_synthetic(const GraphGenSpec& spec);

}  // namespace opsched
