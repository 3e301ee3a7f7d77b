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

#include "bhl/simulator.hpp"

#include <algorithm>
#include <ostream>
#include <queue>
#include <sstream>

#include "bhl/errors.hpp"
#include "bhl/io.hpp"

namespace bhl {

Tree::Tree(std::vector<TreeNode> nodes, double horizon) : nodes_(std::move(nodes)), horizon_(horizon) {
  subtree_alive_.assign(nodes_.size(), 0);
  for (const auto& n : nodes_)
    if (n.death_time > horizon_) alive_.push_back(n.id);
  // Children always have larger ids than their parent.
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    const auto& n = nodes_[i];
    if (n.death_time > horizon_) subtree_alive_[i] = 1;
    if (subtree_alive_[i] && n.has_parent()) subtree_alive_[n.parent] = 1;
  }
}

Tree simulate_tree(const OffspringDistribution& d, const LifetimeLaw& law, double horizon, RngStream& rng,
                   std::size_t max_nodes) {
  if (max_nodes < 1) throw ConfigError("simulate_tree: max_nodes must be >= 1");
  if (!(horizon > 0.0)) throw ConfigError("simulate_tree: horizon must be > 0");

  std::vector<TreeNode> nodes;
  nodes.push_back(TreeNode{0, kNoParent, 0.0, law.sample(rng), 0, 0, 0});

  // Min-heap on (death_time, id); the id tie-break makes the order total.
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pending;
  pending.emplace(nodes[0].death_time, 0);

  while (!pending.empty() && pending.top().first <= horizon) {
    const NodeId id = pending.top().second;
    pending.pop();
    const int k = d.sample(rng);
    if (k == 0) continue;
    if (nodes.size() + static_cast<std::size_t>(k) > max_nodes) {
      std::ostringstream os;
      os << "simulate_tree: population cap of " << max_nodes << " nodes exceeded";
      throw PopulationCapExceeded(os.str());
    }
    const double t = nodes[id].death_time;
    const auto first = static_cast<NodeId>(nodes.size());
    nodes[id].first_child = first;
    nodes[id].n_children = static_cast<std::uint32_t>(k);
    for (int c = 0; c < k; ++c) {
      const auto child = static_cast<NodeId>(nodes.size());
      nodes.push_back(TreeNode{child, id, t, t + law.sample(rng), 0, 0, static_cast<std::uint32_t>(c)});
      pending.emplace(nodes.back().death_time, child);
    }
  }
  return Tree(std::move(nodes), horizon);
}

std::size_t right_continuous_count(const Tree& tree, double t) {
  if (t < 0.0 || t > tree.horizon()) throw DomainError("right_continuous_count: t outside [0, T]");
  return static_cast<std::size_t>(std::count_if(tree.nodes().begin(), tree.nodes().end(), [t](const TreeNode& n) {
    return n.birth_time <= t && t < n.death_time;
  }));
}

std::vector<LineageEvent> ancestral_lineage(const Tree& tree, NodeId v) {
  if (v >= tree.nodes().size() || !tree.is_alive(v)) {
    std::ostringstream os;
    os << "ancestral_lineage: node " << v << " is not alive at the horizon";
    throw DomainError(os.str());
  }
  std::vector<NodeId> path;
  for (NodeId cur = v; cur != kNoParent; cur = tree.node(cur).parent) path.push_back(cur);
  std::reverse(path.begin(), path.end());

  std::vector<LineageEvent> events;
  events.reserve(path.size() - 1);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const TreeNode& a = tree.node(path[i]);
    const TreeNode& next = tree.node(path[i + 1]);
    LineageEvent ev;
    ev.time = a.death_time;
    ev.offspring = a.n_children;
    ev.lineage_child = next.birth_order;
    for (std::uint32_t c = 0; c < a.n_children; ++c) {
      if (c == next.birth_order) continue;
      ev.sibling_survives.push_back(tree.subtree_survives(a.first_child + c));
    }
    events.push_back(std::move(ev));
  }
  return events;
}

void write_trace_csv(std::ostream& os, const Tree& tree, bool header) {
  if (header) os << "id,parent,birth,death,n_children\n";
  for (const auto& n : tree.nodes()) {
    os << n.id << ',';
    if (n.has_parent()) os << n.parent;
    os << ',' << format_double(n.birth_time) << ',' << format_double(n.death_time) << ',' << n.n_children << '\n';
  }
}

}  // namespace bhl
