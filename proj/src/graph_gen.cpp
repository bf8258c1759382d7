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

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

#include "opsched/graph.hpp"
#include "opsched/rng.hpp"

namespace opsched {

namespace {

constexpr std::array<std::pair<GraphPattern, std::string_view>, 5> kPatternNames{{
    {GraphPattern::chain, "chain"},
    {GraphPattern::fork_join, "fork_join"},
    {GraphPattern::resnet_block, "resnet_block"},
    {GraphPattern::inception_block, "inception_block"},
    {GraphPattern::random_dag, "random_dag"},
}};

void check_range(const Range& r, const std::string& what) {
  if (!(r.min >= 0.0) || !(r.max >= r.min)) {
    throw std::invalid_argument(what + " range must satisfy 0 <= min <= max");
  }
}

class Builder {
 public:
  std::size_t add() {
    ids_.push_back("n" + std::to_string(ids_.size()));
    return ids_.size() - 1;
  }
  void link(std::size_t from, std::size_t to) { edges_.emplace_back(ids_[from], ids_[to]); }

  const std::vector<std::string>& ids() const { return ids_; }
  std::vector<Edge> take_edges() { return std::move(edges_); }

 private:
  std::vector<std::string> ids_;
  std::vector<Edge> edges_;
};

void build_chain(Builder& b, int depth) {
  auto prev = b.add();
  for (int i = 1; i < depth; ++i) {
    auto cur = b.add();
    b.link(prev, cur);
    prev = cur;
  }
}

void build_fork_join(Builder& b, int depth, int fanout) {
  auto join = b.add();
  for (int s = 0; s < depth; ++s) {
    std::vector<std::size_t> branches;
    for (int f = 0; f < fanout; ++f) {
      branches.push_back(b.add());
      b.link(join, branches.back());
    }
    auto next = b.add();
    for (auto br : branches) b.link(br, next);
    join = next;
  }
}

// Bottleneck block: three-op main path plus a shortcut op, joined by an add.
// fanout-1 extra leaves hang off the main path (gradient-style side work that
// nothing downstream waits on).
void build_resnet(Builder& b, int depth, int fanout) {
  auto cur = b.add();
  for (int blk = 0; blk < depth; ++blk) {
    std::array<std::size_t, 3> main{};
    auto prev = cur;
    for (auto& m : main) {
      m = b.add();
      b.link(prev, m);
      prev = m;
    }
    auto shortcut = b.add();
    b.link(cur, shortcut);
    auto sum = b.add();
    b.link(main[2], sum);
    b.link(shortcut, sum);
    for (int j = 0; j + 1 < fanout; ++j) {
      auto leaf = b.add();
      b.link(main[static_cast<std::size_t>(j) % main.size()], leaf);
    }
    cur = sum;
  }
}

// fanout parallel branches of length 1, 2, 3, 1, 2, 3, ... joined by a concat.
void build_inception(Builder& b, int depth, int fanout) {
  auto cur = b.add();
  for (int blk = 0; blk < depth; ++blk) {
    std::vector<std::size_t> tails;
    for (int br = 0; br < fanout; ++br) {
      auto prev = cur;
      for (int k = 0; k <= br % 3; ++k) {
        auto n = b.add();
        b.link(prev, n);
        prev = n;
      }
      tails.push_back(prev);
    }
    auto concat = b.add();
    for (auto t : tails) b.link(t, concat);
    cur = concat;
  }
}

// depth layers of 1..fanout nodes; each node consumes one or two nodes of the
// previous layer and occasionally one from further back.
void build_random(Builder& b, int depth, int fanout, Rng& rng) {
  std::vector<std::vector<std::size_t>> layers;
  for (int l = 0; l < depth; ++l) {
    const auto width = rng.uniform_int(1, fanout);
    std::vector<std::size_t> layer;
    for (std::int64_t i = 0; i < width; ++i) {
      auto n = b.add();
      if (!layers.empty()) {
        const auto& prev = layers.back();
        const auto k = rng.uniform_int(1, std::min<std::int64_t>(2, static_cast<std::int64_t>(prev.size())));
        std::vector<std::size_t> pool = prev;
        for (std::int64_t j = 0; j < k; ++j) {
          const auto pick = static_cast<std::size_t>(
              rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
          b.link(pool[pick], n);
          pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        if (layers.size() >= 2 && rng.coin(0.3)) {
          const auto& far = layers[static_cast<std::size_t>(
              rng.uniform_int(0, static_cast<std::int64_t>(layers.size()) - 2))];
          b.link(far[static_cast<std::size_t>(
                     rng.uniform_int(0, static_cast<std::int64_t>(far.size()) - 1))],
                 n);
        }
      }
      layer.push_back(n);
    }
    layers.push_back(std::move(layer));
  }
}

}  // namespace

std::string_view to_string(GraphPattern pattern) {
  for (const auto& [p, name] : kPatternNames) {
    if (p == pattern) return name;
  }
  return "unknown";
}

GraphPattern parse_pattern(std::string_view name) {
  std::string valid;
  for (const auto& [p, n] : kPatternNames) {
    if (n == name) return p;
    if (!valid.empty()) valid += ", ";
    valid += n;
  }
  throw std::invalid_argument("unknown pattern '" + std::string(name) + "' (valid: " + valid + ")");
}

void GraphGenSpec::validate() const {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (fanout < 1) throw std::invalid_argument("fanout must be >= 1");
  if (op_mix.empty()) throw std::invalid_argument("op mix must be non-empty");
  for (const auto& e : op_mix) {
    const std::string name = e.key.op_type.empty() ? "<unnamed>" : e.key.to_string();
    e.key.validate();
    if (!(e.weight > 0.0)) throw std::invalid_argument(name + ": weight must be > 0");
    check_range(e.serial, name + " t_s");
    check_range(e.work, name + " t_w");
    check_range(e.spawn_overhead, name + " c");
    if (e.serial.max == 0.0 && e.work.max == 0.0 && e.spawn_overhead.max == 0.0) {
      throw std::invalid_argument(name + ": cost ranges are all zero");
    }
  }
}

std::vector<OpMixEntry> default_op_mix() {
  return {
      {{"Conv2D", {32, 17, 17, 384}}, 3.0, {0.5, 2.0}, {200.0, 600.0}, {0.02, 0.1}},
      {{"Conv2DBackpropFilter", {32, 8, 8, 384}}, 2.0, {0.5, 2.0}, {100.0, 400.0}, {0.1, 0.3}},
      {{"MatMul", {64, 1024}}, 2.0, {0.2, 1.0}, {20.0, 120.0}, {0.1, 0.4}},
      {{"BiasAdd", {32, 8, 8, 384}}, 1.0, {0.1, 0.5}, {5.0, 30.0}, {0.05, 0.2}},
      {{"Relu", {32, 8, 8, 384}}, 1.0, {0.1, 0.5}, {5.0, 20.0}, {0.05, 0.2}},
  };
}

DataflowGraph generate_synthetic(const GraphGenSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  std::vector<CostCurve> curves;
  for (const auto& e : spec.op_mix) {
    CostCurve c;
    c.serial = rng.uniform(e.serial.min, e.serial.max);
    c.work = rng.uniform(e.work.min, e.work.max);
    c.spawn_overhead = rng.uniform(e.spawn_overhead.min, e.spawn_overhead.max);
    if (c.serial == 0.0 && c.work == 0.0 && c.spawn_overhead == 0.0) c.work = e.work.max;
    curves.push_back(c);
  }

  Builder b;
  switch (spec.pattern) {
    case GraphPattern::chain: build_chain(b, spec.depth); break;
    case GraphPattern::fork_join: build_fork_join(b, spec.depth, spec.fanout); break;
    case GraphPattern::resnet_block: build_resnet(b, spec.depth, spec.fanout); break;
    case GraphPattern::inception_block: build_inception(b, spec.depth, spec.fanout); break;
    case GraphPattern::random_dag: build_random(b, spec.depth, spec.fanout, rng); break;
  }

  double total_weight = 0.0;
  for (const auto& e : spec.op_mix) total_weight += e.weight;

  std::vector<OpNode> nodes;
  for (const auto& id : b.ids()) {
    double r = rng.uniform() * total_weight;
    std::size_t pick = spec.op_mix.size() - 1;
    for (std::size_t i = 0; i < spec.op_mix.size(); ++i) {
      if (r < spec.op_mix[i].weight) {
        pick = i;
        break;
      }
      r -= spec.op_mix[i].weight;
    }
    nodes.push_back({id, spec.op_mix[pick].key, curves[pick]});
  }
  return DataflowGraph::build(std::move(nodes), b.take_edges());
}

}  // namespace opsched
