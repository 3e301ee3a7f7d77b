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
#include <random>

#include "bhl/errors.hpp"
#include "bhl/genfun.hpp"
#include "bhl/stats.hpp"
#include "bhl/theory.hpp"
#include "doctest.h"

using namespace bhl;

namespace {

LineageRecord record(std::vector<double> times, std::vector<int> sizes, double marker, double weight = 1.0) {
  LineageRecord r;
  r.survived = true;
  r.times = std::move(times);
  r.sizes = std::move(sizes);
  r.marker = marker;
  r.weight = weight;
  return r;
}

// Multinomial draw of n trials over probabilities p.
std::vector<double> multinomial(std::span<const double> p, int n, std::mt19937_64& g) {
  std::vector<double> out(p.size(), 0.0);
  double rest = 1.0;
  int left = n;
  for (std::size_t i = 0; i + 1 < p.size() && left > 0; ++i) {
    const double q = std::min(1.0, p[i] / rest);
    const int k = std::binomial_distribution<int>(left, q)(g);
    out[i] = k;
    left -= k;
    rest -= p[i];
  }
  out.back() += left;
  return out;
}

}  // namespace

TEST_CASE("histogram binning") {
  JointHistogram h({uniform_axis("x", 0.0, 1.0, 4), uniform_axis("y", 0.0, 2.0, 2)});
  CHECK(h.size() == 8);
  const double a[] = {0.0, 0.0}, b[] = {1.0, 2.0}, c[] = {0.25, 1.0}, out[] = {1.01, 0.5};
  CHECK(*h.locate(a) == 0);
  CHECK(*h.locate(b) == 7);
  CHECK(*h.locate(c) == 3);
  CHECK(!h.locate(out));
  CHECK(h.add(c, 2.5));
  CHECK(!h.add(out));
  CHECK(h.out_of_range() == 1);
  CHECK(h.total_weight() == 2.5);
  CHECK(h.unravel(3) == std::vector<std::size_t>{1, 1});
  const auto bb = h.bin_bounds(3);
  CHECK(bb[0] == std::pair<double, double>{0.25, 0.5});
  CHECK(bb[1] == std::pair<double, double>{1.0, 2.0});
  CHECK_THROWS(uniform_axis("bad", 1.0, 0.0, 3));
}

TEST_CASE("bin_records") {
  std::vector<Axis> axes{uniform_axis("t1", 0.0, 2.0, 4), uniform_axis("S", 0.0, 1.0, 5)};
  RecordFilter f;
  f.events = 1;
  f.sizes = std::vector<int>{2};
  const auto empty = bin_records({}, axes, f, 10);
  CHECK(empty.total_weight() == 0.0);
  CHECK(empty.n_trials() == 10);

  std::vector<LineageRecord> recs{record({0.6}, {2}, 0.75)};
  const auto one = bin_records(recs, axes, f, 1);
  CHECK(one.total_weight() == 1.0);
  CHECK(one.count(1 * 5 + 3) == 1.0);

  recs.push_back(record({0.6, 1.0}, {2, 2}, 0.5));
  recs.push_back(record({0.6}, {1}, 0.5));
  LineageRecord dead;
  recs.push_back(dead);
  recs.push_back(record({2.5}, {2}, 0.5));
  const auto h = bin_records(recs, axes, f, 5);
  CHECK(h.total_weight() == 1.0);
  CHECK(h.out_of_range() == 1);

  CHECK(*record_coordinate(recs[1], "t2") == 1.0);
  CHECK(*record_coordinate(recs[1], "l1") == 2.0);
  CHECK(*record_coordinate(recs[1], "J") == 2.0);
  CHECK(*record_coordinate(recs[1], "S") == 0.5);
  CHECK(!record_coordinate(recs[1], "t3"));
}

TEST_CASE("merge is exact, associative and commutative") {
  std::vector<Axis> axes{uniform_axis("t1", 0.0, 1.0, 7), uniform_axis("S", 0.0, 1.0, 3)};
  RecordFilter f;
  f.events = 1;
  RngStream rng(1, 0);
  std::vector<LineageRecord> recs;
  for (int i = 0; i < 3000; ++i) recs.push_back(record({rng.uniform()}, {2}, rng.uniform(), 0.1 + rng.uniform()));
  const auto whole = bin_records(recs, axes, f, 3000);
  std::span<const LineageRecord> all(recs);
  const auto a = bin_records(all.subspan(0, 1000), axes, f, 1000);
  const auto b = bin_records(all.subspan(1000, 1000), axes, f, 1000);
  const auto c = bin_records(all.subspan(2000), axes, f, 1000);
  auto abc = a;
  abc.merge(b);
  abc.merge(c);
  auto cba = c;
  cba.merge(b);
  cba.merge(a);
  CHECK(abc.n_trials() == 3000);
  for (std::size_t i = 0; i < whole.size(); ++i) {
    CHECK(abc.count(i) == doctest::Approx(whole.count(i)).epsilon(1e-12));
    CHECK(abc.count(i) == doctest::Approx(cba.count(i)).epsilon(1e-12));
  }
  JointHistogram other({uniform_axis("t1", 0.0, 1.0, 6)});
  CHECK_THROWS_AS(abc.merge(other), DomainError);
}

TEST_CASE("expected_histogram") {
  const auto h = expected_histogram([](std::span<const double>) { return 1.0; }, {uniform_axis("x", 0.0, 1.0, 10)});
  for (std::size_t i = 0; i < 10; ++i) CHECK(h.count(i) == doctest::Approx(0.1).epsilon(1e-14));

  const OffspringDistribution one({0.0, 1.0});
  const auto flat = build_markov(one, 1.0, 1.0);
  const auto u = expected_histogram([&](std::span<const double> x) { return s_density(flat, x[0]); },
                                    {uniform_axis("S", 0.0, 1.0, 8)});
  for (std::size_t i = 0; i < 8; ++i) CHECK(u.count(i) == doctest::Approx(0.125).epsilon(1e-10));

  CHECK_THROWS_AS(expected_histogram([](std::span<const double>) { return std::nan(""); },
                                     {uniform_axis("x", 0.0, 1.0, 2)}),
                  NumericsError);
  CHECK_THROWS(expected_histogram([](std::span<const double>) { return 1.0; }, {uniform_axis("x", 0.0, 1.0, 2)}, 4));

  // One-event slice of the uniform-marker law: refinement oracle.
  const OffspringDistribution crit({0.5, 0.0, 0.5});
  const auto table = build_markov(crit, 1.0, 2.0);
  const RenewalLaw e1{LifetimeLaw::exponential(1.0)};
  const DensityFn dens = [&](std::span<const double> x) {
    return uniform_lineage_density(UniformLineageQuery{{x[0]}, {2}, x[1], 2.0}, table, crit, e1);
  };
  std::vector<Axis> axes{uniform_axis("t1", 0.0, 2.0, 10), uniform_axis("S", 0.0, 1.0, 10)};
  const auto coarse = expected_histogram(dens, axes, 5);
  const auto fine = expected_histogram(dens, axes, 51);
  for (std::size_t i = 0; i < coarse.size(); ++i) CHECK(std::abs(coarse.count(i) - fine.count(i)) <= 1e-8);
}

TEST_CASE("tv_distance") {
  JointHistogram a({uniform_axis("x", 0.0, 1.0, 2)}), b = a, c = a;
  a.add_to_bin(0, 6);
  a.add_to_bin(1, 4);
  b.add_to_bin(0, 5);
  b.add_to_bin(1, 5);
  CHECK(tv_distance(a, a) == 0.0);
  CHECK(tv_distance(a, b) == doctest::Approx(0.1).epsilon(1e-14));
  JointHistogram d({uniform_axis("x", 0.0, 1.0, 2)}), e = d;
  d.add_to_bin(0, 3);
  e.add_to_bin(1, 7);
  CHECK(tv_distance(d, e) == 1.0);
  CHECK_THROWS_AS(tv_distance(a, JointHistogram({uniform_axis("x", 0.0, 1.0, 3)})), DomainError);
  CHECK(tv_mc_error(b, 100) == doctest::Approx(0.05).epsilon(1e-14));
}

TEST_CASE("chi_square_test") {
  const std::vector<double> e{10, 20, 30, 40};
  const auto exact = chi_square_test(e, e);
  CHECK(exact.statistic == 0.0);
  CHECK(exact.p_value == 1.0);
  CHECK(exact.dof == 3);

  // Sparse bins are pooled until expected >= 5.
  const std::vector<double> o2{1, 1, 1, 1, 1, 95}, e2{1, 1, 1, 1, 1, 95};
  const auto pooled = chi_square_test(o2, e2);
  CHECK(pooled.pooled_bins == 2);
  CHECK(pooled.dof == 1);
  CHECK_THROWS_AS(chi_square_test(std::vector<double>{1, 1}, std::vector<double>{1, 1}), DomainError);

  CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-12));

  // Null calibration: p-values of multinomial draws are uniform.
  std::vector<double> p(20);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = (i + 1.0) / 210.0;
  std::mt19937_64 g(42);
  std::vector<double> pvals;
  for (int rep = 0; rep < 300; ++rep) pvals.push_back(chi_square_test(multinomial(p, 100'000, g), p).p_value);
  CHECK(ks_test(pvals, [](double x) { return x; }).p_value > 0.001);

  // Power against a shifted distribution.
  std::vector<double> shifted(p.rbegin(), p.rend());
  CHECK(chi_square_test(multinomial(shifted, 100'000, g), p).p_value < 1e-6);
}

TEST_CASE("ks_test") {
  std::mt19937_64 g(7);
  std::exponential_distribution<double> exp1(1.0);
  const auto cdf1 = [](double x) { return x > 0 ? 1.0 - std::exp(-x) : 0.0; };
  std::vector<double> pvals;
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<double> xs(1000);
    for (auto& x : xs) x = exp1(g);
    pvals.push_back(ks_test(xs, cdf1).p_value);
  }
  CHECK(ks_test(pvals, [](double x) { return x; }).p_value > 0.001);

  std::vector<double> xs(10'000);
  for (auto& x : xs) x = exp1(g);
  CHECK(ks_test(xs, [](double x) { return x > 0 ? 1.0 - std::exp(-2.0 * x) : 0.0; }).p_value < 1e-6);

  const std::vector<double> same(50, 0.3);
  CHECK(ks_test(same, [](double x) { return x; }).statistic == doctest::Approx(0.7).epsilon(1e-14));
  CHECK_THROWS_AS(ks_test({0.1, 0.2}, [](double x) { return x; }), DomainError);
  CHECK(kolmogorov_sf(1.3580986393225507) == doctest::Approx(0.05).epsilon(1e-6));
}

TEST_CASE("marker histogram for a single lineage converges to uniform") {
  std::vector<LineageRecord> recs;
  RngStream rng(3, 0);
  const int n = 40'000;
  for (int i = 0; i < n; ++i) recs.push_back(record({}, {}, rng.uniform()));
  RecordFilter f;
  f.events = 0;
  const std::size_t bins = 20;
  const auto obs = bin_records(recs, {uniform_axis("S", 0.0, 1.0, bins)}, f, n);
  const auto ref = expected_histogram([](std::span<const double>) { return 1.0; }, {uniform_axis("S", 0.0, 1.0, bins)});
  CHECK(tv_distance(obs, ref) <= 3.0 * std::sqrt(static_cast<double>(bins) / n));
}
