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
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace bhl {

/// Reproducible random stream. The output sequence is a pure function of
/// (base_seed, stream_index); replicate i of an experiment uses index i so
/// results never depend on how replicates are spread across threads.
class RngStream {
 public:
  RngStream(std::uint64_t base_seed, std::uint64_t stream_index);

  std::uint64_t base_seed() const noexcept { return base_seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on (0,1].
  double uniform_pos() { return 1.0 - uniform(); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t base_seed_;
  std::uint64_t stream_index_;
  std::mt19937_64 engine_;
};

/// Finite-support offspring law (p_0, ..., p_kmax).
class OffspringDistribution {
 public:
  /// Throws ConfigError unless entries lie in [0,1] and sum to 1 within 1e-12.
  /// Trailing zeros are trimmed; the mass is never renormalized.
  explicit OffspringDistribution(std::vector<double> probs);

  std::span<const double> probs() const noexcept { return probs_; }
  int max_offspring() const noexcept { return static_cast<int>(probs_.size()) - 1; }
  double prob(int k) const noexcept {
    return (k >= 0 && k <= max_offspring()) ? probs_[static_cast<std::size_t>(k)] : 0.0;
  }
  double mean() const noexcept { return mean_; }

  /// f(s) = sum_k p_k s^k. Throws DomainError outside [0,1].
  double pgf(double s) const;
  /// f'(s). Throws DomainError outside [0,1].
  double pgf_derivative(double s) const;

  // Horner evaluation without the domain check; solvers call these on
  // intermediate stages that may stray from [0,1] by roundoff.
  double pgf_unchecked(double s) const noexcept;
  double pgf_derivative_unchecked(double s) const noexcept;

  /// Inverse-CDF draw on the cumulative table.
  int sample(RngStream& rng) const;

 private:
  std::vector<double> probs_;
  std::vector<double> cumulative_;
  double mean_ = 0.0;
};

struct ExponentialLifetime {
  double rate;
};
struct DeterministicLifetime {
  double value;
};
struct GammaLifetime {
  double shape;
  double scale;
};

/// Lifetime law mu: exponential, deterministic or gamma.
class LifetimeLaw {
 public:
  using Variant = std::variant<ExponentialLifetime, DeterministicLifetime, GammaLifetime>;

  static LifetimeLaw exponential(double rate);
  static LifetimeLaw deterministic(double value);
  static LifetimeLaw gamma(double shape, double scale);

  const Variant& variant() const noexcept { return law_; }
  bool is_exponential() const noexcept { return std::holds_alternative<ExponentialLifetime>(law_); }
  bool is_deterministic() const noexcept { return std::holds_alternative<DeterministicLifetime>(law_); }
  bool is_gamma() const noexcept { return std::holds_alternative<GammaLifetime>(law_); }
  bool is_continuous() const noexcept { return !is_deterministic(); }

  /// Exponential rate; throws DomainError for the other variants.
  double rate() const;
  double mean() const noexcept;
  std::string name() const;

  double sample(RngStream& rng) const;
  /// mu((t, inf)). Right-continuous; the deterministic tail is 1 iff t < d.
  double tail(double t) const;
  double cdf(double t) const { return 1.0 - tail(t); }
  /// Lebesgue density; throws DomainError for the deterministic law.
  double density(double t) const;

  /// Gamma-form parameters (shape, scale); exponential maps to (1, 1/r).
  /// Throws DomainError for the deterministic law.
  std::pair<double, double> gamma_form() const;

 private:
  explicit LifetimeLaw(Variant v) : law_(v) {}
  Variant law_;
};

}  // namespace bhl
