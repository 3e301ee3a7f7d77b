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

#include <algorithm>
#include <cmath>
#include <map>

#include "bhl/errors.hpp"
#include "bhl/genfun.hpp"
#include "bhl/sampling.hpp"
#include "bhl/stats.hpp"
#include "doctest.h"

using namespace bhl;

namespace {

Tree fixed_tree_with_population(std::size_t at_least) {
  const OffspringDistribution d({0.2, 0.3, 0.5});
  for (std::uint64_t i = 0;; ++i) {
    RngStream rng(77, i);
    auto tree = simulate_tree(d, LifetimeLaw::exponential(1.0), 3.0, rng);
    if (tree.population() >= at_least) return tree;
  }
}

}  // namespace

TEST_CASE("scheme names") {
  CHECK(parse_scheme("uniform") == Scheme::UniformMarker);
  CHECK(parse_scheme("palm") == Scheme::Palm);
  CHECK(parse_scheme("leftmost") == Scheme::Leftmost);
  CHECK(scheme_name(Scheme::Leftmost) == "leftmost");
  CHECK_THROWS_AS(parse_scheme("random"), ConfigError);
}

TEST_CASE("uniform marker: single survivor gives a uniform marker") {
  std::vector<double> markers;
  for (std::uint64_t i = 0; i < 20'000; ++i) {
    RngStream rng(1, i);
    const auto tree = simulate_tree(OffspringDistribution({0.0, 1.0}), LifetimeLaw::deterministic(1.0), 4.0, rng);
    const auto rec = sample_uniform_marker(tree, rng);
    REQUIRE(rec.survived);
    CHECK(rec.events() == 4);
    CHECK(std::all_of(rec.sizes.begin(), rec.sizes.end(), [](int l) { return l == 1; }));
    markers.push_back(*rec.marker);
  }
  CHECK(ks_test(markers, [](double s) { return s; }).p_value > 0.001);
}

TEST_CASE("uniform marker: the maximum of l markers has density l s^(l-1)") {
  // Pure birth with lattice lifetimes: exactly 2^n individuals at time n.
  const auto d = OffspringDistribution({0.0, 0.0, 1.0});
  std::vector<double> markers;
  for (std::uint64_t i = 0; i < 20'000; ++i) {
    RngStream rng(2, i);
    const auto tree = simulate_tree(d, LifetimeLaw::deterministic(1.0), 2.0, rng);
    REQUIRE(tree.population() == 4);
    markers.push_back(*sample_uniform_marker(tree, rng).marker);
  }
  CHECK(ks_test(markers, [](double s) { return std::pow(s, 4); }).p_value > 0.001);
}

TEST_CASE("uniform marker picks each alive individual equally often") {
  const auto tree = fixed_tree_with_population(4);
  std::map<NodeId, double> freq;
  const int n = 10'000;
  for (int i = 0; i < n; ++i) {
    RngStream rng(3, static_cast<std::uint64_t>(i));
    freq[*sample_uniform_marker(tree, rng).node] += 1.0;
  }
  std::vector<double> obs, expected;
  for (NodeId v : tree.alive()) {
    obs.push_back(freq[v]);
    expected.push_back(1.0);
  }
  CHECK(chi_square_test(obs, expected).p_value >= 0.001);
}

TEST_CASE("extinct trees") {
  RngStream rng(4, 0);
  const auto tree = simulate_tree(OffspringDistribution({1.0}), LifetimeLaw::exponential(1.0), 2.0, rng);
  CHECK(!sample_uniform_marker(tree, rng).survived);
  CHECK(sample_palm(tree).empty());
  const auto left = sample_leftmost(tree);
  CHECK(!left.survived);
  CHECK(left.times.empty());
}

TEST_CASE("palm records: one per alive individual sharing the root event") {
  const auto tree = fixed_tree_with_population(3);
  const auto recs = sample_palm(tree);
  CHECK(recs.size() == tree.population());
  double total = 0.0;
  for (const auto& r : recs) {
    CHECK(r.scheme == Scheme::Palm);
    CHECK(r.weight == 1.0);
    REQUIRE(r.events() >= 1);
    CHECK(r.times[0] == recs[0].times[0]);
    CHECK(r.sizes[0] == recs[0].sizes[0]);
    CHECK(std::is_sorted(r.times.begin(), r.times.end()));
    total += r.weight;
  }
  CHECK(total == static_cast<double>(tree.population()));
}

TEST_CASE("palm: pure-birth lineages have Exp(2r) inter-event times") {
  const double r = 1.0, T = 2.0;
  // Concatenating the [0,T] windows of independent lineages yields a
  // Poisson stream, so its gaps are exactly exponential. One lineage per
  // tree (size-biased by rejection against a cap) keeps them independent.
  const double cap = 160.0;
  std::vector<double> gaps;
  double offset = 0.0, last = 0.0;
  for (std::uint64_t i = 0; i < 60'000; ++i) {
    RngStream rng(5, i);
    const auto tree = simulate_tree(OffspringDistribution({0.0, 0.0, 1.0}), LifetimeLaw::exponential(r), T, rng);
    const auto recs = sample_palm(tree);
    REQUIRE(static_cast<double>(recs.size()) <= cap);
    if (rng.uniform() * cap >= static_cast<double>(recs.size())) continue;
    const auto& rec = recs[static_cast<std::size_t>(rng.uniform() * static_cast<double>(recs.size()))];
    for (double t : rec.times) {
      gaps.push_back(offset + t - last);
      last = offset + t;
    }
    offset += T;
  }
  REQUIRE(gaps.size() > 1000);
  CHECK(ks_test(gaps, [r](double x) { return 1.0 - std::exp(-2.0 * r * x); }).p_value > 0.001);
}

TEST_CASE("leftmost: structural cases") {
  for (std::uint64_t i = 0; i < 200; ++i) {
    RngStream rng(6, i);
    const auto tree = simulate_tree(OffspringDistribution({0.0, 0.0, 1.0}), LifetimeLaw::exponential(1.0), 2.0, rng);
    const auto rec = sample_leftmost(tree);
    REQUIRE(rec.survived);
    CHECK(std::all_of(rec.left_extinct.begin(), rec.left_extinct.end(), [](int k) { return k == 0; }));
    CHECK(*rec.node == [&] {
      NodeId cur = 0;
      while (!tree.is_alive(cur)) cur = tree.node(cur).first_child;
      return cur;
    }());
  }
  for (std::uint64_t i = 0; i < 50; ++i) {
    RngStream rng(7, i);
    const auto tree = simulate_tree(OffspringDistribution({0.0, 1.0}), LifetimeLaw::exponential(1.0), 3.0, rng);
    const auto rec = sample_leftmost(tree);
    CHECK(rec.events() == tree.nodes().size() - 1);
    CHECK(std::all_of(rec.sizes.begin(), rec.sizes.end(), [](int l) { return l == 1; }));
  }
}

TEST_CASE("leftmost: K invariants and skipped siblings are extinct") {
  const OffspringDistribution d({0.3, 0.1, 0.3, 0.3});
  for (std::uint64_t i = 0; i < 2000; ++i) {
    RngStream rng(8, i);
    const auto tree = simulate_tree(d, LifetimeLaw::gamma(2.0, 0.5), 3.0, rng);
    const auto rec = sample_leftmost(tree);
    if (!rec.survived) continue;
    REQUIRE(rec.left_extinct.size() == rec.events());
    for (std::size_t e = 0; e < rec.events(); ++e) {
      CHECK(rec.left_extinct[e] >= 0);
      CHECK(rec.left_extinct[e] <= rec.sizes[e] - 1);
    }
    const auto lineage = ancestral_lineage(tree, *rec.node);
    REQUIRE(lineage.size() == rec.events());
    for (std::size_t e = 0; e < lineage.size(); ++e) {
      CHECK(lineage[e].lineage_child == static_cast<std::uint32_t>(rec.left_extinct[e]));
      for (int k = 0; k < rec.left_extinct[e]; ++k) CHECK(!lineage[e].sibling_survives[static_cast<std::size_t>(k)]);
    }
  }
}

TEST_CASE("leftmost: first-event K frequencies follow the extinction probability") {
  // Critical binary: given L_1 = 2 and T_1 near t, P(K_1 = 1) / P(K_1 = 0) = q_{T-t}.
  const OffspringDistribution d({0.5, 0.0, 0.5});
  const double T = 2.0;
  const auto table = build_markov(d, 1.0, T);
  double k0 = 0, k1 = 0, q_weighted = 0;
  for (std::uint64_t i = 0; i < 200'000; ++i) {
    RngStream rng(9, i);
    const auto tree = simulate_tree(d, LifetimeLaw::exponential(1.0), T, rng);
    const auto rec = sample_leftmost(tree);
    if (!rec.survived || rec.events() == 0 || rec.times[0] > 0.5) continue;
    (rec.left_extinct[0] == 0 ? k0 : k1) += 1.0;
    if (rec.left_extinct[0] == 0) q_weighted += table.extinction_prob(T - rec.times[0]);
  }
  // E[#K=1] = sum over K=0 events of q_{T-t}, since the densities differ by that factor.
  const double se = std::sqrt(k1 + q_weighted);
  CHECK(std::abs(k1 - q_weighted) <= 3.0 * se);
}
