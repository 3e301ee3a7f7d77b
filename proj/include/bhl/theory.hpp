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

#include <span>
#include <vector>

#include "bhl/distributions.hpp"
#include "bhl/genfun.hpp"

namespace bhl {

/// Renewal process whose inter-arrival law is the lifetime law.
struct RenewalLaw {
  LifetimeLaw law;
};

struct RenewalPath {
  /// Arrivals in (0, T].
  std::vector<double> arrivals;
  /// First arrival beyond T.
  double first_beyond = 0.0;
};

RenewalPath renewal_sample(const RenewalLaw& rl, double horizon, RngStream& rng);

/// Density of (tau_1 in dt_1, ..., tau_j in dt_j, tau_{j+1} > T): the
/// product of inter-arrival densities times the tail at T - t_j. For the
/// exponential law this is exactly r^j e^{-rT}. Throws DomainError for the
/// deterministic law or ill-formed times.
double renewal_interval_density(const RenewalLaw& rl, std::span<const double> times, double horizon);

/// Smallest j with P(#arrivals in (0,T] <= j) >= prob, estimated from
/// `samples` renewal paths.
int event_count_quantile(const RenewalLaw& rl, double horizon, double prob, RngStream& rng, int samples = 100'000);

/// Arguments of the uniform-marker lineage law: j = times.size() events at
/// 0 <= t_1 <= ... <= t_j <= T (boundaries by continuity) with sizes l_i >= 1, and marker value s.
struct UniformLineageQuery {
  std::vector<double> times;
  std::vector<int> sizes;
  double s = 1.0;
  double horizon = 1.0;
};

/// Joint density of (N_T > 0, J = j, T_i in dt_i, L_i = l_i, S in ds):
/// renewal factor times prod_i l_i p_{l_i} F_{T-t_i}(s)^{l_i - 1}.
double uniform_lineage_density(const UniformLineageQuery& q, const GenFunTable& table, const OffspringDistribution& d,
                    const RenewalLaw& rl);

/// Lattice lifetime delta_1 with horizon n = sizes.size(): exact
/// P(N_n > 0, L_1 = l_1, ..., L_n = l_n) by integrating the polynomial
/// prod_i l_i p_{l_i} F_{n-i}(s)^{l_i - 1} over s in [0,1].
double uniform_lineage_exact(std::span<const int> sizes, const GenFunTable& discrete, const OffspringDistribution& d,
                           std::size_t coefficient_budget = 10'000'000);

/// Lattice analogue of the leftmost lineage law:
/// P(N_n > 0, L = l, K = k) = prod_i p_{l_i} q_{n-i}^{k_i}.
double leftmost_lineage_exact(std::span<const int> sizes, std::span<const int> ks, const GenFunTable& discrete,
                           const OffspringDistribution& d);

/// Lattice analogue of the Palm lineage law, conditional on the marker
/// event: prod_i l_i p_{l_i} / m^n.
double palm_lineage_exact(std::span<const int> sizes, const OffspringDistribution& d);

/// Composite Simpson rule on an arbitrary increasing grid; runs of equal
/// spacing get Simpson (3/8 for an odd tail), everything else trapezoid.
double integrate_simpson(std::span<const double> x, std::span<const double> y);

/// Ancestral rate bias
///   B(t,T,l) = (1 - F_T(0))^{-1} int_0^1 F_{T-t}(s)^{l-1} F_T'(s) ds
/// with T the table horizon. The integral runs over the table's s-nodes and
/// is normalized by the same rule applied to F_T', so B(.,.,1) = 1 to
/// roundoff. Requires at least quad_points (>= 201) s-nodes.
double rate_bias(const GenFunTable& table, double t, int ell, int quad_points = 201);

/// Density of the sampled marker S: F_T'(s) / (1 - F_T(0)).
double s_density(const GenFunTable& table, double s);

/// r l p_l B(t,T,l) for exponential lifetimes.
double ancestral_rate(const GenFunTable& table, const OffspringDistribution& d, double rate, double t, int ell);

/// Palm lineage law given the marker event:
/// renewal factor times prod_i l_i p_{l_i}, divided by E[N_T].
double palm_lineage_density(std::span<const double> times, std::span<const int> sizes, const OffspringDistribution& d,
                    const RenewalLaw& rl, const GenFunTable& table);

/// Leftmost lineage law, joint with {N_T > 0}:
/// renewal factor times prod_i p_{l_i} P(N_{T-t_i} = 0)^{k_i}, 0 <= k_i < l_i.
double leftmost_lineage_density(std::span<const double> times, std::span<const int> sizes, std::span<const int> ks,
                    const OffspringDistribution& d, const RenewalLaw& rl, const GenFunTable& table);

}  // namespace bhl
