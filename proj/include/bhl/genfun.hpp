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

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bhl/distributions.hpp"

namespace bhl {

/// Polynomial in s, coefficient i multiplies s^i.
using Polynomial = std::vector<double>;

double poly_eval(std::span<const double> c, double s) noexcept;
Polynomial poly_multiply(std::span<const double> a, std::span<const double> b);
Polynomial poly_derivative(std::span<const double> c);
/// Integral over [0,1]: sum_m c_m / (m+1).
double poly_integrate_unit(std::span<const double> c) noexcept;

struct GenFunOptions {
  int steps = 1000;
  int s_points = 201;
  /// Abort (rather than clamp) on excursions beyond 1e-9 outside [0,1].
  bool strict = true;
  /// Maximum number of polynomial coefficients for the discrete builder.
  std::size_t coefficient_budget = 1'000'000;
};

/// s-grid on [0,1]: uniform spacing 1/(s_points-1) up to about 0.9, then
/// four times finer over the last decile where F_T' concentrates.
std::vector<double> make_s_grid(int s_points);

/// Grid of F_t(s) = E[s^{N_t}] and dF_t/ds over (t, s).
class GenFunTable {
 public:
  GenFunTable(std::vector<double> t_grid, std::vector<double> s_grid, std::vector<double> values,
              std::vector<double> deriv_values, std::vector<Polynomial> coefficients = {});

  std::span<const double> t_grid() const noexcept { return t_grid_; }
  std::span<const double> s_grid() const noexcept { return s_grid_; }
  std::size_t t_size() const noexcept { return t_grid_.size(); }
  std::size_t s_size() const noexcept { return s_grid_.size(); }
  double horizon() const noexcept { return t_grid_.back(); }

  double value(std::size_t ti, std::size_t sj) const noexcept { return values_[ti * s_grid_.size() + sj]; }
  double deriv(std::size_t ti, std::size_t sj) const noexcept { return derivs_[ti * s_grid_.size() + sj]; }
  std::span<const double> value_row(std::size_t ti) const noexcept {
    return {values_.data() + ti * s_grid_.size(), s_grid_.size()};
  }
  std::span<const double> deriv_row(std::size_t ti) const noexcept {
    return {derivs_.data() + ti * s_grid_.size(), s_grid_.size()};
  }

  /// Bilinear interpolation, exact at grid nodes. Discrete (lattice) tables
  /// are piecewise constant in t: F_t = F_floor(t).
  double eval(double t, double s) const;
  double eval_deriv(double t, double s) const;
  /// q_t = F_t(0).
  double extinction_prob(double t) const { return eval(t, 0.0); }
  /// E[N_t] = dF_t/ds at s = 1.
  double mean_population(double t) const { return eval_deriv(t, 1.0); }

  bool is_discrete() const noexcept { return !coefficients_.empty(); }
  /// Exact coefficients of F_0, ..., F_n (discrete tables only).
  std::span<const Polynomial> coefficients() const noexcept { return coefficients_; }

  /// Number of entries clamped back into [0,1] while building.
  std::size_t clamped() const noexcept { return clamped_; }
  void set_clamped(std::size_t n) noexcept { clamped_ = n; }

 private:
  double interpolate(const std::vector<double>& grid_values, double t, double s) const;

  std::vector<double> t_grid_;
  std::vector<double> s_grid_;
  std::vector<double> values_;
  std::vector<double> derivs_;
  std::vector<Polynomial> coefficients_;
  std::vector<Polynomial> deriv_coefficients_;
  std::size_t clamped_ = 0;
};

/// Exponential lifetimes: RK4 on dF/dt = r (f(F) - F), with the companion
/// linear equation dG/dt = r (f'(F) G - G), G_0 = 1, for dF/ds.
GenFunTable build_markov(const OffspringDistribution& d, double rate, double horizon,
                         const GenFunOptions& opts = {});

/// Lifetime delta_1: F_j = f(F_{j-1}) by exact polynomial composition.
GenFunTable build_discrete(const OffspringDistribution& d, int generations, const GenFunOptions& opts = {});

/// Continuous lifetime law: F_t(s) = s mu((t,inf)) + int_0^t f(F_{t-u}(s)) mu(du),
/// solved forward on a uniform t-grid with product-trapezoid weights.
GenFunTable build_volterra(const OffspringDistribution& d, const LifetimeLaw& law, double horizon,
                           const GenFunOptions& opts = {});

/// Picks the natural builder for the law: Markov for exponential, discrete
/// for deterministic(1) with integer horizon, Volterra for gamma.
GenFunTable build_for_law(const OffspringDistribution& d, const LifetimeLaw& law, double horizon,
                          const GenFunOptions& opts = {});

}  // namespace bhl
