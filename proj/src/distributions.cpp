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

#include "bhl/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "bhl/errors.hpp"

namespace bhl {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t base_seed, std::uint64_t stream_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                    static_cast<std::uint32_t>(stream_index), static_cast<std::uint32_t>(stream_index >> 32),
                    0x62686cu};
  return std::mt19937_64(seq);
}

void require_unit(double s, const char* what) {
  if (!(s >= 0.0 && s <= 1.0)) {
    std::ostringstream os;
    os << what << ": argument " << s << " outside [0,1]";
    throw DomainError(os.str());
  }
}

}  // namespace

RngStream::RngStream(std::uint64_t base_seed, std::uint64_t stream_index)
    : base_seed_(base_seed), stream_index_(stream_index), engine_(seeded_engine(base_seed, stream_index)) {}

OffspringDistribution::OffspringDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw ConfigError("offspring distribution: empty probability vector");
  double sum = 0.0;
  for (std::size_t k = 0; k < probs_.size(); ++k) {
    const double p = probs_[k];
    if (!(p >= 0.0 && p <= 1.0)) {
      std::ostringstream os;
      os << "offspring distribution: p_" << k << " = " << p << " outside [0,1]";
      throw ConfigError(os.str());
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "offspring distribution: probabilities sum to " << sum << ", not 1";
    throw ConfigError(os.str());
  }
  while (probs_.size() > 1 && probs_.back() == 0.0) probs_.pop_back();

  cumulative_.resize(probs_.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < probs_.size(); ++k) {
    acc += probs_[k];
    cumulative_[k] = acc;
    mean_ += static_cast<double>(k) * probs_[k];
  }
  cumulative_.back() = 1.0;
}

double OffspringDistribution::pgf_unchecked(double s) const noexcept {
  double acc = 0.0;
  for (auto it = probs_.rbegin(); it != probs_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

double OffspringDistribution::pgf_derivative_unchecked(double s) const noexcept {
  double acc = 0.0;
  for (std::size_t k = probs_.size() - 1; k >= 1; --k) acc = acc * s + static_cast<double>(k) * probs_[k];
  return acc;
}

double OffspringDistribution::pgf(double s) const {
  require_unit(s, "pgf_eval");
  return pgf_unchecked(s);
}

double OffspringDistribution::pgf_derivative(double s) const {
  require_unit(s, "pgf_derivative");
  return pgf_derivative_unchecked(s);
}

int OffspringDistribution::sample(RngStream& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto k = static_cast<int>(it - cumulative_.begin());
  return std::min(k, max_offspring());
}

LifetimeLaw LifetimeLaw::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("exponential lifetime: rate must be > 0");
  return LifetimeLaw(ExponentialLifetime{rate});
}

LifetimeLaw LifetimeLaw::deterministic(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError("deterministic lifetime: value must be > 0");
  return LifetimeLaw(DeterministicLifetime{value});
}

LifetimeLaw LifetimeLaw::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale))
    throw ConfigError("gamma lifetime: shape and scale must be > 0");
  return LifetimeLaw(GammaLifetime{shape, scale});
}

double LifetimeLaw::rate() const {
  if (const auto* e = std::get_if<ExponentialLifetime>(&law_)) return e->rate;
  throw DomainError("lifetime law " + name() + " has no rate");
}

double LifetimeLaw::mean() const noexcept {
  return std::visit(
      [](const auto& l) -> double {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, ExponentialLifetime>) return 1.0 / l.rate;
        else if constexpr (std::is_same_v<L, DeterministicLifetime>) return l.value;
        else return l.shape * l.scale;
      },
      law_);
}

std::string LifetimeLaw::name() const {
  if (is_exponential()) return "exponential";
  if (is_deterministic()) return "deterministic";
  return "gamma";
}

double LifetimeLaw::sample(RngStream& rng) const {
  return std::visit(
      [&rng](const auto& l) -> double {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, ExponentialLifetime>) {
          return -std::log(rng.uniform_pos()) / l.rate;
        } else if constexpr (std::is_same_v<L, DeterministicLifetime>) {
          return l.value;
        } else {
          // Marsaglia-Tsang rejection, as implemented by libstdc++.
          std::gamma_distribution<double> g(l.shape, l.scale);
          return g(rng.engine());
        }
      },
      law_);
}

double LifetimeLaw::tail(double t) const {
  if (t < 0.0) return 1.0;
  return std::visit(
      [t](const auto& l) -> double {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, ExponentialLifetime>) return std::exp(-l.rate * t);
        else if constexpr (std::is_same_v<L, DeterministicLifetime>) return t < l.value ? 1.0 : 0.0;
        else return boost::math::gamma_q(l.shape, t / l.scale);
      },
      law_);
}

double LifetimeLaw::density(double t) const {
  if (t < 0.0) return 0.0;
  return std::visit(
      [t, this](const auto& l) -> double {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, ExponentialLifetime>) return l.rate * std::exp(-l.rate * t);
        else if constexpr (std::is_same_v<L, DeterministicLifetime>)
          throw DomainError("lifetime law " + name() + " has no density");
        else return boost::math::gamma_p_derivative(l.shape, t / l.scale) / l.scale;
      },
      law_);
}

std::pair<double, double> LifetimeLaw::gamma_form() const {
  if (const auto* e = std::get_if<ExponentialLifetime>(&law_)) return {1.0, 1.0 / e->rate};
  if (const auto* g = std::get_if<GammaLifetime>(&law_)) return {g->shape, g->scale};
  throw DomainError("deterministic lifetime law has no gamma form");
}

}  // namespace bhl
