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

#include "bhl/genfun.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "bhl/errors.hpp"

namespace bhl {

namespace {

constexpr double kClampTolerance = 1e-9;

struct ClampCounter {
  bool strict;
  std::size_t clamped = 0;

  double operator()(double v, const char* where) {
    if (!std::isfinite(v)) throw NumericsError(std::string(where) + ": non-finite generating function value");
    if (v >= 0.0 && v <= 1.0) return v;
    if (v < -kClampTolerance || v > 1.0 + kClampTolerance) {
      if (strict) {
        std::ostringstream os;
        os.precision(17);
        os << where << ": generating function value " << v << " left [0,1]";
        throw NumericsError(os.str());
      }
      ++clamped;
    }
    return std::clamp(v, 0.0, 1.0);
  }
};

void check_grid_options(const GenFunOptions& opts, int min_steps) {
  if (opts.steps < min_steps) {
    std::ostringstream os;
    os << "genfun: steps = " << opts.steps << " is below the minimum " << min_steps;
    throw ConfigError(os.str());
  }
  if (opts.s_points < 51) {
    std::ostringstream os;
    os << "genfun: s_points = " << opts.s_points << " is below the minimum 51";
    throw ConfigError(os.str());
  }
}

void check_horizon(double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("genfun: horizon must be > 0");
}

std::vector<double> uniform_t_grid(double horizon, int steps) {
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) t[static_cast<std::size_t>(i)] = horizon * i / steps;
  t.back() = horizon;
  return t;
}

// Second-order derivative estimate on a nonuniform grid.
std::vector<double> finite_difference_row(std::span<const double> s, std::span<const double> f) {
  const std::size_t n = s.size();
  std::vector<double> d(n);
  auto three_point = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t at) {
    // Derivative at s[at] of the quadratic through (a, b, c).
    const double xa = s[a], xb = s[b], xc = s[c], x = s[at];
    const double la = ((x - xb) + (x - xc)) / ((xa - xb) * (xa - xc));
    const double lb = ((x - xa) + (x - xc)) / ((xb - xa) * (xb - xc));
    const double lc = ((x - xa) + (x - xb)) / ((xc - xa) * (xc - xb));
    return la * f[a] + lb * f[b] + lc * f[c];
  };
  d[0] = three_point(0, 1, 2, 0);
  for (std::size_t j = 1; j + 1 < n; ++j) d[j] = three_point(j - 1, j, j + 1, j);
  d[n - 1] = three_point(n - 3, n - 2, n - 1, n - 1);
  for (auto& v : d) v = std::max(v, 0.0);
  return d;
}

}  // namespace

double poly_eval(std::span<const double> c, double s) noexcept {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
  return acc;
}

Polynomial poly_multiply(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  Polynomial out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

Polynomial poly_derivative(std::span<const double> c) {
  if (c.size() <= 1) return {0.0};
  Polynomial out(c.size() - 1);
  for (std::size_t i = 1; i < c.size(); ++i) out[i - 1] = static_cast<double>(i) * c[i];
  return out;
}

double poly_integrate_unit(std::span<const double> c) noexcept {
  double acc = 0.0;
  for (std::size_t m = 0; m < c.size(); ++m) acc += c[m] / static_cast<double>(m + 1);
  return acc;
}

std::vector<double> make_s_grid(int s_points) {
  if (s_points < 3) throw ConfigError("genfun: s_points must be at least 3");
  const int intervals = s_points - 1;
  const double h = 1.0 / intervals;
  const int coarse = static_cast<int>(std::lround(0.9 * intervals));
  const int fine = 4 * (intervals - coarse);
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(coarse + fine + 1));
  for (int i = 0; i <= coarse; ++i) s.push_back(i * h);
  const double s_c = coarse * h;
  for (int k = 1; k <= fine; ++k) s.push_back(s_c + (1.0 - s_c) * k / fine);
  s.back() = 1.0;
  return s;
}

GenFunTable::GenFunTable(std::vector<double> t_grid, std::vector<double> s_grid, std::vector<double> values,
                         std::vector<double> deriv_values, std::vector<Polynomial> coefficients)
    : t_grid_(std::move(t_grid)),
      s_grid_(std::move(s_grid)),
      values_(std::move(values)),
      derivs_(std::move(deriv_values)),
      coefficients_(std::move(coefficients)) {
  if (t_grid_.size() < 2 || s_grid_.size() < 2) throw ConfigError("genfun table: grids need at least 2 points");
  if (values_.size() != t_grid_.size() * s_grid_.size() || derivs_.size() != values_.size())
    throw ConfigError("genfun table: value matrix does not match grid sizes");
  for (const auto& c : coefficients_) deriv_coefficients_.push_back(poly_derivative(c));
}

double GenFunTable::interpolate(const std::vector<double>& grid_values, double t, double s) const {
  const std::size_t ns = s_grid_.size();
  const double h = t_grid_[1] - t_grid_[0];
  auto ti = static_cast<std::size_t>(std::floor(t / h));
  ti = std::min(ti, t_grid_.size() - 2);
  double wt = (t - t_grid_[ti]) / (t_grid_[ti + 1] - t_grid_[ti]);
  wt = std::clamp(wt, 0.0, 1.0);

  auto it = std::upper_bound(s_grid_.begin(), s_grid_.end(), s);
  auto sj = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - s_grid_.begin() - 1, 0));
  sj = std::min(sj, ns - 2);
  double ws = (s - s_grid_[sj]) / (s_grid_[sj + 1] - s_grid_[sj]);
  ws = std::clamp(ws, 0.0, 1.0);

  const double* r0 = grid_values.data() + ti * ns;
  const double* r1 = r0 + ns;
  const double lo = r0[sj] + ws * (r0[sj + 1] - r0[sj]);
  const double hi = r1[sj] + ws * (r1[sj + 1] - r1[sj]);
  return lo + wt * (hi - lo);
}

namespace {

void check_eval_args(double t, double s, double horizon) {
  const double slack = 1e-12 * std::max(1.0, horizon);
  if (!(t >= -slack && t <= horizon + slack) || !(s >= 0.0 && s <= 1.0)) {
    std::ostringstream os;
    os << "genfun eval: (t=" << t << ", s=" << s << ") outside [0," << horizon << "] x [0,1]";
    throw DomainError(os.str());
  }
}

std::size_t lattice_index(double t, std::size_t last) {
  const auto idx = static_cast<std::size_t>(std::floor(std::max(t, 0.0) + 1e-9));
  return std::min(idx, last);
}

}  // namespace

double GenFunTable::eval(double t, double s) const {
  check_eval_args(t, s, horizon());
  if (is_discrete()) {
    const auto& c = coefficients_[lattice_index(t, coefficients_.size() - 1)];
    return std::clamp(poly_eval(c, s), 0.0, 1.0);
  }
  return interpolate(values_, std::clamp(t, 0.0, horizon()), s);
}

double GenFunTable::eval_deriv(double t, double s) const {
  check_eval_args(t, s, horizon());
  if (is_discrete()) {
    const auto& c = deriv_coefficients_[lattice_index(t, deriv_coefficients_.size() - 1)];
    return std::max(poly_eval(c, s), 0.0);
  }
  return interpolate(derivs_, std::clamp(t, 0.0, horizon()), s);
}

GenFunTable build_markov(const OffspringDistribution& d, double rate, double horizon, const GenFunOptions& opts) {
  check_grid_options(opts, 100);
  check_horizon(horizon);
  if (!(rate > 0.0)) throw ConfigError("genfun: rate must be > 0");

  auto t_grid = uniform_t_grid(horizon, opts.steps);
  auto s_grid = make_s_grid(opts.s_points);
  const std::size_t nt = t_grid.size(), ns = s_grid.size();
  std::vector<double> values(nt * ns), derivs(nt * ns);
  ClampCounter clamp{opts.strict};

  const double h = horizon / opts.steps;
  auto rhs_f = [&](double F) { return rate * (d.pgf_unchecked(F) - F); };
  auto rhs_g = [&](double F, double G) { return rate * (d.pgf_derivative_unchecked(F) - 1.0) * G; };

  for (std::size_t j = 0; j < ns; ++j) {
    double F = s_grid[j], G = 1.0;
    values[j] = F;
    derivs[j] = G;
    for (std::size_t i = 1; i < nt; ++i) {
      const double k1 = rhs_f(F), l1 = rhs_g(F, G);
      const double F2 = F + 0.5 * h * k1, G2 = G + 0.5 * h * l1;
      const double k2 = rhs_f(F2), l2 = rhs_g(F2, G2);
      const double F3 = F + 0.5 * h * k2, G3 = G + 0.5 * h * l2;
      const double k3 = rhs_f(F3), l3 = rhs_g(F3, G3);
      const double F4 = F + h * k3, G4 = G + h * l3;
      const double k4 = rhs_f(F4), l4 = rhs_g(F4, G4);
      F = clamp(F + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), "build_markov");
      G = std::max(G + h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4), 0.0);
      values[i * ns + j] = F;
      derivs[i * ns + j] = G;
    }
  }
  GenFunTable table(std::move(t_grid), std::move(s_grid), std::move(values), std::move(derivs));
  table.set_clamped(clamp.clamped);
  return table;
}

GenFunTable build_discrete(const OffspringDistribution& d, int generations, const GenFunOptions& opts) {
  if (generations < 1) throw ConfigError("genfun: discrete horizon must be >= 1");
  const auto kmax = static_cast<std::size_t>(d.max_offspring());

  // Degree of F_n is kmax^n; refuse before allocating.
  std::size_t degree = 1;
  for (int j = 0; j < generations; ++j) {
    if (kmax != 0 && degree > opts.coefficient_budget / kmax) {
      std::ostringstream os;
      os << "genfun: k_max^n = " << kmax << "^" << generations << " exceeds the coefficient budget "
         << opts.coefficient_budget;
      throw ConfigError(os.str());
    }
    degree *= kmax;
  }

  const auto probs = d.probs();
  std::vector<Polynomial> coeffs;
  coeffs.reserve(static_cast<std::size_t>(generations) + 1);
  coeffs.push_back({0.0, 1.0});
  for (int j = 1; j <= generations; ++j) {
    const Polynomial& prev = coeffs.back();
    Polynomial acc{probs.back()};
    for (std::size_t k = probs.size() - 1; k-- > 0;) {
      acc = poly_multiply(acc, prev);
      acc[0] += probs[k];
    }
    coeffs.push_back(std::move(acc));
  }

  std::vector<double> t_grid(static_cast<std::size_t>(generations) + 1);
  for (std::size_t i = 0; i < t_grid.size(); ++i) t_grid[i] = static_cast<double>(i);
  auto s_grid = make_s_grid(opts.s_points);
  const std::size_t ns = s_grid.size();
  std::vector<double> values(t_grid.size() * ns), derivs(t_grid.size() * ns);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const Polynomial dp = poly_derivative(coeffs[i]);
    for (std::size_t j = 0; j < ns; ++j) {
      values[i * ns + j] = std::clamp(poly_eval(coeffs[i], s_grid[j]), 0.0, 1.0);
      derivs[i * ns + j] = std::max(poly_eval(dp, s_grid[j]), 0.0);
    }
  }
  return GenFunTable(std::move(t_grid), std::move(s_grid), std::move(values), std::move(derivs), std::move(coeffs));
}

namespace {

// Moments of mu over [a, b]: mass and first moment, via regularized
// incomplete gamma functions (exponential is shape 1).
struct CellMoments {
  double mass;
  double first;
};

CellMoments gamma_cell(double shape, double scale, double a, double b) {
  using boost::math::gamma_p;
  using boost::math::gamma_q;
  auto diff = [](double alpha, double xa, double xb) {
    const double pa = gamma_p(alpha, xa);
    if (pa < 0.5) return gamma_p(alpha, xb) - pa;
    return gamma_q(alpha, xa) - gamma_q(alpha, xb);
  };
  const double xa = a / scale, xb = b / scale;
  return {diff(shape, xa, xb), shape * scale * diff(shape + 1.0, xa, xb)};
}

}  // namespace

GenFunTable build_volterra(const OffspringDistribution& d, const LifetimeLaw& law, double horizon,
                           const GenFunOptions& opts) {
  if (!law.is_continuous())
    throw ConfigError("genfun: the Volterra solver needs a continuous lifetime law (use the discrete builder)");
  check_grid_options(opts, 200);
  check_horizon(horizon);

  const auto [shape, scale] = law.gamma_form();
  auto t_grid = uniform_t_grid(horizon, opts.steps);
  auto s_grid = make_s_grid(opts.s_points);
  const std::size_t nt = t_grid.size(), ns = s_grid.size();
  const double h = horizon / opts.steps;

  // Product-trapezoid weights: f(F_{t-u}) is taken piecewise linear in u
  // and integrated exactly against mu on each cell [u_k, u_{k+1}].
  std::vector<double> A(nt - 1), B(nt - 1);
  for (std::size_t k = 0; k + 1 < nt; ++k) {
    const double a = t_grid[k], b = t_grid[k + 1];
    const auto m = gamma_cell(shape, scale, a, b);
    A[k] = std::max((b * m.mass - m.first) / h, 0.0);
    B[k] = std::max((m.first - a * m.mass) / h, 0.0);
  }

  std::vector<double> values(nt * ns), phi(nt * ns);
  ClampCounter clamp{opts.strict};
  for (std::size_t j = 0; j < ns; ++j) {
    values[j] = s_grid[j];
    phi[j] = d.pgf_unchecked(s_grid[j]);
  }

  std::vector<double> rest(ns);
  for (std::size_t i = 1; i < nt; ++i) {
    const double tail = law.tail(t_grid[i]);
    for (std::size_t j = 0; j < ns; ++j) rest[j] = s_grid[j] * tail + B[i - 1] * phi[j];
    for (std::size_t k = 1; k < i; ++k) {
      const double w = A[k] + B[k - 1];
      const double* row = phi.data() + (i - k) * ns;
      for (std::size_t j = 0; j < ns; ++j) rest[j] += w * row[j];
    }
    for (std::size_t j = 0; j < ns; ++j) {
      double x = values[(i - 1) * ns + j];
      bool converged = false;
      for (int it = 0; it < 50; ++it) {
        const double next = rest[j] + A[0] * d.pgf_unchecked(x);
        const double delta = std::abs(next - x);
        x = next;
        if (delta <= 1e-12) {
          converged = true;
          break;
        }
      }
      if (!converged) throw NumericsError("build_volterra: Picard iteration did not contract within 50 iterations");
      x = clamp(x, "build_volterra");
      values[i * ns + j] = x;
      phi[i * ns + j] = d.pgf_unchecked(x);
    }
  }

  std::vector<double> derivs(nt * ns);
  for (std::size_t i = 0; i < nt; ++i) {
    const auto row = finite_difference_row(s_grid, std::span<const double>(values.data() + i * ns, ns));
    std::copy(row.begin(), row.end(), derivs.begin() + static_cast<std::ptrdiff_t>(i * ns));
  }
  GenFunTable table(std::move(t_grid), std::move(s_grid), std::move(values), std::move(derivs));
  table.set_clamped(clamp.clamped);
  return table;
}

GenFunTable build_for_law(const OffspringDistribution& d, const LifetimeLaw& law, double horizon,
                          const GenFunOptions& opts) {
  if (law.is_exponential()) return build_markov(d, law.rate(), horizon, opts);
  if (law.is_gamma()) return build_volterra(d, law, horizon, opts);
  const auto& det = std::get<DeterministicLifetime>(law.variant());
  const double n = std::round(horizon);
  if (det.value != 1.0 || std::abs(horizon - n) > 1e-12 || n < 1.0)
    throw ConfigError("genfun: the deterministic lifetime law needs value 1 and an integer horizon");
  return build_discrete(d, static_cast<int>(n), opts);
}

}  // namespace bhl
