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

#include "bhl/sampling.hpp"

#include "bhl/errors.hpp"

namespace bhl {

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::UniformMarker: return "uniform";
    case Scheme::Palm: return "palm";
    case Scheme::Leftmost: return "leftmost";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "uniform") return Scheme::UniformMarker;
  if (name == "palm") return Scheme::Palm;
  if (name == "leftmost") return Scheme::Leftmost;
  throw ConfigError("unknown sampling scheme '" + name + "' (expected uniform, palm or leftmost)");
}

namespace {

LineageRecord lineage_record(const Tree& tree, NodeId v, Scheme scheme) {
  LineageRecord rec;
  rec.scheme = scheme;
  rec.survived = true;
  rec.node = v;
  for (const auto& ev : ancestral_lineage(tree, v)) {
    rec.times.push_back(ev.time);
    rec.sizes.push_back(static_cast<int>(ev.offspring));
  }
  return rec;
}

}  // namespace

LineageRecord sample_uniform_marker(const Tree& tree, RngStream& rng) {
  LineageRecord rec;
  rec.scheme = Scheme::UniformMarker;
  if (!tree.survived()) return rec;
  const auto& alive = tree.alive();
  std::size_t best = 0;
  double best_marker = -1.0;
  for (std::size_t i = 0; i < alive.size(); ++i) {
    const double u = rng.uniform();
    if (u > best_marker) {
      best_marker = u;
      best = i;
    }
  }
  rec = lineage_record(tree, alive[best], Scheme::UniformMarker);
  rec.marker = best_marker;
  return rec;
}

std::vector<LineageRecord> sample_palm(const Tree& tree) {
  std::vector<LineageRecord> out;
  out.reserve(tree.population());
  for (NodeId v : tree.alive()) out.push_back(lineage_record(tree, v, Scheme::Palm));
  return out;
}

LineageRecord sample_leftmost(const Tree& tree) {
  LineageRecord rec;
  rec.scheme = Scheme::Leftmost;
  if (!tree.survived()) return rec;
  rec.survived = true;
  NodeId cur = 0;
  while (!tree.is_alive(cur)) {
    const TreeNode& a = tree.node(cur);
    std::uint32_t k = 0;
    while (!tree.subtree_survives(a.first_child + k)) ++k;
    rec.times.push_back(a.death_time);
    rec.sizes.push_back(static_cast<int>(a.n_children));
    rec.left_extinct.push_back(static_cast<int>(k));
    cur = a.first_child + k;
  }
  rec.node = cur;
  return rec;
}

}  // namespace bhl
