/*
Copyright 2026 The bhlineage Authors
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

                http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "bhl/distributions.hpp"

namespace bhl {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoParent = std::numeric_limits<NodeId>::max();

/// One individual. Siblings are created together at their parent's death,
/// so the children of a node occupy the contiguous id range
/// [first_child, first_child + n_children).
struct TreeNode {
  NodeId id = 0;
  NodeId parent = kNoParent;
  double birth_time = 0.0;
  /// Drawn death time; a node is alive at the horizon iff death_time > T.
  double death_time = 0.0;
  NodeId first_child = 0;
  std::uint32_t n_children = 0;
  /// 0-based index among siblings, in simulation order.
  std::uint32_t birth_order = 0;

  bool has_parent() const noexcept { return parent != kNoParent; }
};

/// A Bellman-Harris tree censored at the horizon.
class Tree {
 public:
  Tree(std::vector<TreeNode> nodes, double horizon);

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& node(NodeId id) const { return nodes_.at(id); }
  double horizon() const noexcept { return horizon_; }
  /// Ids of the individuals alive at the horizon, ascending.
  const std::vector<NodeId>& alive() const noexcept { return alive_; }
  std::size_t population() const noexcept { return alive_.size(); }
  bool survived() const noexcept { return !alive_.empty(); }
  bool is_alive(NodeId id) const { return node(id).death_time > horizon_; }
  /// Whether the subtree rooted at id has an individual alive at the horizon.
  bool subtree_survives(NodeId id) const { return subtree_alive_.at(id) != 0; }

 private:
  std::vector<TreeNode> nodes_;
  double horizon_;
  std::vector<NodeId> alive_;
  std::vector<std::uint8_t> subtree_alive_;
};

/// Event-driven simulation in death-time order. Throws
/// PopulationCapExceeded if the tree would exceed max_nodes nodes.
Tree simulate_tree(const OffspringDistribution& d, const LifetimeLaw& law, double horizon, RngStream& rng,
                   std::size_t max_nodes = 1'000'000);

/// N_t with the right-continuous convention: birth_time <= t < death_time.
std::size_t right_continuous_count(const Tree& tree, double t);

/// One reproduction event on the path from the root to a sampled individual.
struct LineageEvent {
  double time = 0.0;
  std::uint32_t offspring = 0;
  /// birth_order of the child that continues the lineage.
  std::uint32_t lineage_child = 0;
  /// For every other child, in birth order: does its subtree reach the horizon?
  std::vector<bool> sibling_survives;
};

/// Reproduction events root -> v. Throws DomainError if v is not alive.
std::vector<LineageEvent> ancestral_lineage(const Tree& tree, NodeId v);

/// Writes "id,parent,birth,death,n_children" rows (parent empty for the root).
void write_trace_csv(std::ostream& os, const Tree& tree, bool header = true);

}  // namespace bhl
