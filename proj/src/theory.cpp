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

#include "bhl/theory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bhl/errors.hpp"

namespace bhl {

namespace {

// Ties and t_1 = 0 are measure-zero boundaries; the densities extend to
// them by continuity, which keeps quadrature nodes on bin edges valid.
void check_times(std::span<const double> times, double horizon, const char* where) {
  double prev = 0.0;
  for (double t : times) {
    if (!(t >= prev) || t > horizon) {
      std::ostringstream os;
      os << where << ": event times must satisfy 0 <= t_1 <= ... <= t_j <= T = " << horizon;
      throw DomainError(os.str());
    }
    prev = t;
  }
}

void check_sizes(std::span<const int> sizes, std::size_t j, const char* where) {
  if (sizes.size() != j) throw DomainError(std::string(where) + ": need one size per event time");
  for (int l : sizes)
    if (l < 1) throw DomainError(std::string(where) + ": lineage sizes must be >= 1");
}

double integer_power(double base, int exp) {
  double out = 1.0;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

double survival_probability(const GenFunTable& table) {
  const double surv = 1.0 - table.extinction_prob(table.horizon());
  if (!(surv > 1e-12)) throw DegenerateConditioning("survival probability 1 - F_T(0) is below 1e-12");
  return surv;
}

}  // namespace

RenewalPath renewal_sample(const RenewalLaw& rl, double horizon, RngStream& rng) {
  if (!(horizon > 0.0)) throw DomainError("renewal_sample: horizon must be > 0");
  RenewalPath path;
  double t = rl.law.sample(rng);
  while (t <= horizon) {
    path.arrivals.push_back(t);
    t += rl.law.sample(rng);
  }
  path.first_beyond = t;
  return path;
}

double renewal_interval_density(const RenewalLaw& rl, std::span<const double> times, double horizon) {
  if (!rl.law.is_continuous())
    throw DomainError("renewal_interval_density: the deterministic law has no density (use the lattice path)");
  check_times(times, horizon, "renewal_interval_density");
  if (rl.law.is_exponential()) {
    const double r = rl.law.rate();
    return integer_power(r, static_cast<int>(times.size())) * std::exp(-r * horizon);
  }
  double out = 1.0, prev = 0.0;
  for (double t : times) {
    out *= rl.law.density(t - prev);
    prev = t;
  }
  return out * rl.law.tail(horizon - prev);
}

int event_count_quantile(const RenewalLaw& rl, double horizon, double prob, RngStream& rng, int samples) {
  std::vector<int> counts;
  counts.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i)
    counts.push_back(static_cast<int>(renewal_sample(rl, horizon, rng).arrivals.size()));
  std::sort(counts.begin(), counts.end());
  const auto idx = static_cast<std::size_t>(std::ceil(prob * samples)) - 1;
  return counts[std::min(idx, counts.size() - 1)];
}

double uniform_lineage_density(const UniformLineageQuery& q, const GenFunTable& table, const OffspringDistribution& d,
                    const RenewalLaw& rl) {
  check_times(q.times, q.horizon, "uniform_lineage_density");
  check_sizes(q.sizes, q.times.size(), "uniform_lineage_density");
  if (!(q.s >= 0.0 && q.s <= 1.0)) throw DomainError("uniform_lineage_density: s outside [0,1]");
  double product = 1.0;
  for (std::size_t i = 0; i < q.sizes.size(); ++i) {
    const int l = q.sizes[i];
    const double p = d.prob(l);
    if (p == 0.0) return 0.0;
    product *= l * p * integer_power(table.eval(q.horizon - q.times[i], q.s), l - 1);
  }
  return renewal_interval_density(rl, q.times, q.horizon) * product;
}

namespace {

std::size_t lattice_horizon(const GenFunTable& discrete, const char* where) {
  if (!discrete.is_discrete()) throw DomainError(std::string(where) + ": needs a table from build_discrete");
  return discrete.coefficients().size() - 1;
}

}  // namespace

double uniform_lineage_exact(std::span<const int> sizes, const GenFunTable& discrete, const OffspringDistribution& d,
                           std::size_t coefficient_budget) {
  const std::size_t n = lattice_horizon(discrete, "uniform_lineage_exact");
  check_sizes(sizes, n, "uniform_lineage_exact");
  const auto coeffs = discrete.coefficients();
  Polynomial acc{1.0};
  for (std::size_t i = 1; i <= n; ++i) {
    const int l = sizes[i - 1];
    const double w = l * d.prob(l);
    if (w == 0.0) return 0.0;
    for (auto& c : acc) c *= w;
    const Polynomial& F = coeffs[n - i];
    for (int e = 0; e < l - 1; ++e) {
      if (acc.size() + F.size() - 1 > coefficient_budget)
        throw CapacityError("uniform_lineage_exact: polynomial exceeds the coefficient budget");
      acc = poly_multiply(acc, F);
    }
  }
  return poly_integrate_unit(acc);
}

double leftmost_lineage_exact(std::span<const int> sizes, std::span<const int> ks, const GenFunTable& discrete,
                           const OffspringDistribution& d) {
  const std::size_t n = lattice_horizon(discrete, "leftmost_lineage_exact");
  check_sizes(sizes, n, "leftmost_lineage_exact");
  if (ks.size() != n) throw DomainError("leftmost_lineage_exact: need one k per event");
  const auto coeffs = discrete.coefficients();
  double out = 1.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const int l = sizes[i - 1], k = ks[i - 1];
    if (k < 0 || k > l - 1) throw DomainError("leftmost_lineage_exact: k_i must lie in {0, ..., l_i - 1}");
    out *= d.prob(l) * integer_power(coeffs[n - i][0], k);
  }
  return out;
}

double palm_lineage_exact(std::span<const int> sizes, const OffspringDistribution& d) {
  check_sizes(sizes, sizes.size(), "palm_lineage_exact");
  double out = 1.0;
  for (int l : sizes) out *= l * d.prob(l) / d.mean();
  return out;
}

double integrate_simpson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("integrate_simpson: need matching grids of size >= 2");
  double total = 0.0;
  std::size_t start = 0;
  const std::size_t last = x.size() - 1;
  while (start < last) {
    const double h = x[start + 1] - x[start];
    std::size_t end = start + 1;
    while (end < last && std::abs((x[end + 1] - x[end]) - h) <= 1e-9 * h) ++end;
    std::size_t n = end - start;
    std::size_t i = start;
    if (n == 1) {
      total += 0.5 * h * (y[i] + y[i + 1]);
      start = end;
      continue;
    }
    if (n % 2 == 1) {
      total += 3.0 * h / 8.0 * (y[end - 3] + 3.0 * y[end - 2] + 3.0 * y[end - 1] + y[end]);
      n -= 3;
    }
    for (std::size_t k = 0; k < n; k += 2, i += 2) total += h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
    start = end;
  }
  return total;
}

double rate_bias(const GenFunTable& table, double t, int ell, int quad_points) {
  if (quad_points < 201) throw ConfigError("rate_bias: quad_points must be >= 201");
  if (table.s_size() < static_cast<std::size_t>(quad_points))
    throw ConfigError("rate_bias: table s-grid is coarser than quad_points");
  if (ell < 1) throw DomainError("rate_bias: ell must be >= 1");
  const double T = table.horizon();
  if (!(t >= 0.0 && t <= T)) throw DomainError("rate_bias: t outside [0, T]");
  survival_probability(table);

  const auto s = table.s_grid();
  const auto dF = table.deriv_row(table.t_size() - 1);
  std::vector<double> integrand(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) integrand[j] = integer_power(table.eval(T - t, s[j]), ell - 1) * dF[j];
  const double norm = integrate_simpson(s, dF);
  if (!(norm > 1e-12)) throw DegenerateConditioning("rate_bias: integral of F_T' is below 1e-12");
  return integrate_simpson(s, integrand) / norm;
}

double s_density(const GenFunTable& table, double s) {
  const double surv = survival_probability(table);
  return table.eval_deriv(table.horizon(), s) / surv;
}

double ancestral_rate(const GenFunTable& table, const OffspringDistribution& d, double rate, double t, int ell) {
  if (!(rate > 0.0)) throw DomainError("ancestral_rate: rate must be > 0");
  const double p = d.prob(ell);
  if (p == 0.0) return 0.0;
  if (ell == 1) return rate * p;
  return rate * ell * p * rate_bias(table, t, ell);
}

double palm_lineage_density(std::span<const double> times, std::span<const int> sizes, const OffspringDistribution& d,
                    const RenewalLaw& rl, const GenFunTable& table) {
  check_sizes(sizes, times.size(), "palm_lineage_density");
  const double mean_pop = table.mean_population(table.horizon());
  if (!(mean_pop > 0.0)) throw DegenerateConditioning("palm_lineage_density: E[N_T] is zero");
  double product = 1.0;
  for (int l : sizes) product *= l * d.prob(l);
  return renewal_interval_density(rl, times, table.horizon()) * product / mean_pop;
}

double leftmost_lineage_density(std::span<const double> times, std::span<const int> sizes, std::span<const int> ks,
                    const OffspringDistribution& d, const RenewalLaw& rl, const GenFunTable& table) {
  check_sizes(sizes, times.size(), "leftmost_lineage_density");
  if (ks.size() != times.size()) throw DomainError("leftmost_lineage_density: need one k per event");
  const double T = table.horizon();
  double product = 1.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (ks[i] < 0 || ks[i] > sizes[i] - 1) throw DomainError("leftmost_lineage_density: k_i must lie in {0, ..., l_i - 1}");
    product *= d.prob(sizes[i]) * integer_power(table.extinction_prob(T - times[i]), ks[i]);
  }
  return renewal_interval_density(rl, times, T) * product;
}

}  // namespace bhl
