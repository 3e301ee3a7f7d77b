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

#include <cmath>
#include <sstream>

#include "bhl/errors.hpp"
#include "bhl/genfun.hpp"
#include "bhl/simulator.hpp"
#include "doctest.h"

using namespace bhl;

namespace {

// Hand-built tree: root dies at t1 with two children alive at T.
Tree two_child_tree(double t1, double T) {
  std::vector<TreeNode> nodes;
  nodes.push_back(TreeNode{0, kNoParent, 0.0, t1, 1, 2, 0});
  nodes.push_back(TreeNode{1, 0, t1, T + 1.0, 0, 0, 0});
  nodes.push_back(TreeNode{2, 0, t1, T + 2.0, 0, 0, 1});
  return Tree(std::move(nodes), T);
}

}  // namespace

TEST_CASE("single lineage with lattice lifetimes") {
  RngStream rng(1, 0);
  const auto tree = simulate_tree(OffspringDistribution({0.0, 1.0}), LifetimeLaw::deterministic(1.0), 3.5, rng);
  CHECK(tree.nodes().size() == 4);
  CHECK(tree.population() == 1);
  const auto events = ancestral_lineage(tree, tree.alive()[0]);
  REQUIRE(events.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(events[i].time == static_cast<double>(i + 1));
    CHECK(events[i].offspring == 1);
    CHECK(events[i].sibling_survives.empty());
  }
}

TEST_CASE("certain death") {
  for (std::uint64_t i = 0; i < 100; ++i) {
    RngStream rng(2, i);
    const auto tree = simulate_tree(OffspringDistribution({1.0}), LifetimeLaw::exponential(1.0), 50.0, rng);
    CHECK(tree.population() == 0);
    CHECK(!tree.survived());
  }
}

TEST_CASE("right-continuous population count") {
  const auto tree = two_child_tree(1.0, 3.0);
  CHECK(right_continuous_count(tree, 0.0) == 1);
  CHECK(right_continuous_count(tree, 0.999) == 1);
  CHECK(right_continuous_count(tree, 1.0) == 2);
  CHECK(right_continuous_count(tree, 3.0) == tree.population());
  CHECK_THROWS_AS(right_continuous_count(tree, 3.5), DomainError);
}

TEST_CASE("ancestral lineage of a hand-built tree") {
  const auto tree = two_child_tree(0.7, 2.0);
  const auto ev = ancestral_lineage(tree, 1);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].time == 0.7);
  CHECK(ev[0].offspring == 2);
  CHECK(ev[0].lineage_child == 0);
  CHECK(ev[0].sibling_survives == std::vector<bool>{true});
  CHECK_THROWS_AS(ancestral_lineage(tree, 0), DomainError);
}

TEST_CASE("tree invariants and structural recount") {
  const OffspringDistribution d({0.3, 0.2, 0.3, 0.2});
  const auto law = LifetimeLaw::gamma(1.5, 0.6);
  for (std::uint64_t rep = 0; rep < 300; ++rep) {
    RngStream rng(3, rep);
    const auto tree = simulate_tree(d, law, 2.5, rng);
    const double T = tree.horizon();
    long balance = 1;
    std::size_t alive = 0;
    for (const auto& n : tree.nodes()) {
      CHECK(n.birth_time < n.death_time);
      if (n.has_parent()) CHECK(n.birth_time == tree.node(n.parent).death_time);
      for (std::uint32_t c = 0; c < n.n_children; ++c) {
        CHECK(tree.node(n.first_child + c).parent == n.id);
        CHECK(tree.node(n.first_child + c).birth_order == c);
      }
      if (n.death_time > T) {
        CHECK(n.n_children == 0);
        ++alive;
      } else {
        balance += static_cast<long>(n.n_children) - 1;
      }
    }
    CHECK(alive == tree.population());
    CHECK(balance == static_cast<long>(tree.population()));
    for (NodeId v : tree.alive()) {
      std::size_t depth = 0;
      for (NodeId a = v; tree.node(a).has_parent(); a = tree.node(a).parent) ++depth;
      CHECK(ancestral_lineage(tree, v).size() == depth);
    }
  }
}

TEST_CASE("population cap") {
  RngStream rng(4, 0);
  CHECK_THROWS_AS(
      simulate_tree(OffspringDistribution({0.0, 0.0, 1.0}), LifetimeLaw::exponential(1.0), 20.0, rng, 1000),
      PopulationCapExceeded);
}

TEST_CASE("determinism per replicate stream") {
  const OffspringDistribution d({0.2, 0.3, 0.5});
  const auto law = LifetimeLaw::exponential(1.0);
  RngStream a(9, 17), b(9, 17);
  const auto ta = simulate_tree(d, law, 3.0, a), tb = simulate_tree(d, law, 3.0, b);
  std::ostringstream sa, sb;
  write_trace_csv(sa, ta);
  write_trace_csv(sb, tb);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("id,parent,birth,death,n_children\n0,,0,", 0) == 0);
}

TEST_CASE("Monte Carlo: extinction and mean population match the generating function") {
  const OffspringDistribution d({0.5, 0.0, 0.5});
  const auto law = LifetimeLaw::exponential(1.0);
  const auto table = build_markov(d, 1.0, 2.0);
  const int n = 100'000;
  double extinct = 0.0, sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    RngStream rng(5, static_cast<std::uint64_t>(i));
    const auto tree = simulate_tree(d, law, 2.0, rng);
    extinct += tree.population() == 0;
    sum += static_cast<double>(tree.population());
    sum2 += static_cast<double>(tree.population() * tree.population());
  }
  const double q = extinct / n;
  CHECK(std::abs(q - 0.5) <= 0.005);
  CHECK(std::abs(q - table.extinction_prob(2.0)) <= 3.0 * std::sqrt(q * (1 - q) / n));
  const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - table.mean_population(2.0)) <= 3.0 * se);
}
