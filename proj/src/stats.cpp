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

#include "bhl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "bhl/errors.hpp"

namespace bhl {

Axis uniform_axis(std::string name, double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw ConfigError("axis " + name + ": need bins > 0 and hi > lo");
  Axis a{std::move(name), {}};
  a.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) a.edges[i] = lo + (hi - lo) * static_cast<double>(i) / bins;
  a.edges.back() = hi;
  return a;
}

JointHistogram::JointHistogram(std::vector<Axis> axes) : axes_(std::move(axes)) {
  std::size_t n = 1;
  for (const auto& a : axes_) {
    if (a.bins() == 0) throw ConfigError("histogram axis " + a.name + " has no bins");
    if (!std::is_sorted(a.edges.begin(), a.edges.end()) ||
        std::adjacent_find(a.edges.begin(), a.edges.end()) != a.edges.end())
      throw ConfigError("histogram axis " + a.name + " edges must be strictly increasing");
    n *= a.bins();
  }
  counts_.assign(n, 0.0);
}

std::optional<std::size_t> JointHistogram::locate(std::span<const double> point) const {
  if (point.size() != axes_.size()) throw DomainError("histogram: point dimension does not match axes");
  std::size_t flat = 0;
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    const auto& e = axes_[d].edges;
    const double x = point[d];
    if (!(x >= e.front() && x <= e.back())) return std::nullopt;
    auto idx = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), x) - e.begin());
    idx = std::min(idx, e.size() - 1) - 1;
    flat = flat * axes_[d].bins() + idx;
  }
  return flat;
}

bool JointHistogram::add(std::span<const double> point, double weight) {
  const auto flat = locate(point);
  if (!flat) {
    ++out_of_range_;
    return false;
  }
  add_to_bin(*flat, weight);
  return true;
}

void JointHistogram::add_to_bin(std::size_t flat, double weight) {
  counts_.at(flat) += weight;
  total_weight_ += weight;
}

bool JointHistogram::same_axes(const JointHistogram& other) const {
  if (axes_.size() != other.axes_.size()) return false;
  for (std::size_t d = 0; d < axes_.size(); ++d)
    if (axes_[d].name != other.axes_[d].name || axes_[d].edges != other.axes_[d].edges) return false;
  return true;
}

void JointHistogram::merge(const JointHistogram& other) {
  if (!same_axes(other)) throw DomainError("histogram merge: axes differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_weight_ += other.total_weight_;
  n_trials_ += other.n_trials_;
  out_of_range_ += other.out_of_range_;
}

std::vector<std::size_t> JointHistogram::unravel(std::size_t flat) const {
  std::vector<std::size_t> idx(axes_.size());
  for (std::size_t d = axes_.size(); d-- > 0;) {
    idx[d] = flat % axes_[d].bins();
    flat /= axes_[d].bins();
  }
  return idx;
}

std::vector<std::pair<double, double>> JointHistogram::bin_bounds(std::size_t flat) const {
  const auto idx = unravel(flat);
  std::vector<std::pair<double, double>> out;
  for (std::size_t d = 0; d < axes_.size(); ++d) out.emplace_back(axes_[d].edges[idx[d]], axes_[d].edges[idx[d] + 1]);
  return out;
}

bool RecordFilter::matches(const LineageRecord& rec) const {
  if (!rec.survived) return false;
  if (events && rec.events() != *events) return false;
  if (sizes && rec.sizes != *sizes) return false;
  if (ks && rec.left_extinct != *ks) return false;
  return true;
}

std::optional<double> record_coordinate(const LineageRecord& rec, const std::string& name) {
  if (name == "S") return rec.marker;
  if (name == "J") return static_cast<double>(rec.events());
  if (name.size() >= 2 && (name[0] == 't' || name[0] == 'l' || name[0] == 'k')) {
    std::size_t i = 0;
    try {
      i = std::stoul(name.substr(1));
    } catch (const std::exception&) {
      throw ConfigError("unknown record coordinate '" + name + "'");
    }
    if (i == 0) throw ConfigError("record coordinates are 1-based: '" + name + "'");
    if (name[0] == 't') return i <= rec.times.size() ? std::optional<double>(rec.times[i - 1]) : std::nullopt;
    if (name[0] == 'l') return i <= rec.sizes.size() ? std::optional<double>(rec.sizes[i - 1]) : std::nullopt;
    return i <= rec.left_extinct.size() ? std::optional<double>(rec.left_extinct[i - 1]) : std::nullopt;
  }
  throw ConfigError("unknown record coordinate '" + name + "'");
}

JointHistogram bin_records(std::span<const LineageRecord> records, std::vector<Axis> axes, const RecordFilter& filter,
                           std::uint64_t n_trials) {
  JointHistogram h(std::move(axes));
  h.set_n_trials(n_trials);
  std::vector<double> point(h.axes().size());
  for (const auto& rec : records) {
    if (!filter.matches(rec)) continue;
    bool ok = true;
    for (std::size_t d = 0; d < point.size(); ++d) {
      const auto c = record_coordinate(rec, h.axes()[d].name);
      if (!c) {
        ok = false;
        break;
      }
      point[d] = *c;
    }
    if (!ok) {
      h.note_out_of_range();
      continue;
    }
    h.add(point, rec.weight);
  }
  return h;
}

JointHistogram expected_histogram(const DensityFn& density, std::vector<Axis> axes, int order) {
  if (order < 3 || order % 2 == 0) throw ConfigError("expected_histogram: order must be odd and >= 3");
  JointHistogram h(std::move(axes));
  const std::size_t dims = h.axes().size();
  // Composite Simpson weights on [0,1] with order nodes.
  std::vector<double> unit_nodes(static_cast<std::size_t>(order)), unit_weights(static_cast<std::size_t>(order));
  const double step = 1.0 / (order - 1);
  for (int i = 0; i < order; ++i) {
    unit_nodes[static_cast<std::size_t>(i)] = i * step;
    const double w = (i == 0 || i == order - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    unit_weights[static_cast<std::size_t>(i)] = w * step / 3.0;
  }

  std::vector<double> point(dims);
  std::vector<std::size_t> node(dims);
  for (std::size_t flat = 0; flat < h.size(); ++flat) {
    const auto bounds = h.bin_bounds(flat);
    double volume = 1.0;
    for (const auto& [lo, hi] : bounds) volume *= hi - lo;
    double acc = 0.0;
    std::fill(node.begin(), node.end(), 0);
    while (true) {
      double w = volume;
      for (std::size_t d = 0; d < dims; ++d) {
        const auto [lo, hi] = bounds[d];
        point[d] = lo + (hi - lo) * unit_nodes[node[d]];
        w *= unit_weights[node[d]];
      }
      const double v = density(point);
      if (!std::isfinite(v)) throw NumericsError("expected_histogram: density returned a non-finite value");
      acc += w * v;
      std::size_t d = dims;
      while (d-- > 0) {
        if (++node[d] < unit_nodes.size()) break;
        node[d] = 0;
      }
      if (d == static_cast<std::size_t>(-1)) break;
    }
    h.add_to_bin(flat, acc);
  }
  return h;
}

double tv_distance(const JointHistogram& a, const JointHistogram& b) {
  if (!a.same_axes(b)) throw DomainError("tv_distance: axes differ");
  const double ta = a.total_weight(), tb = b.total_weight();
  if (ta <= 0.0 && tb <= 0.0) return 0.0;
  if (ta <= 0.0 || tb <= 0.0) return 1.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a.count(i) / ta - b.count(i) / tb);
  return std::min(0.5 * acc, 1.0);
}

double tv_mc_error(const JointHistogram& reference, double n) {
  const double total = reference.total_weight();
  if (total <= 0.0 || n <= 0.0) return 0.0;
  double acc = 0.0;
  for (double c : reference.counts()) {
    const double p = c / total;
    acc += std::sqrt(std::max(p * (1.0 - p), 0.0) / n);
  }
  return 0.5 * acc;
}

double chi_square_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> expected) {
  if (observed.size() != expected.size()) throw DomainError("chi_square_test: bin counts differ");
  double obs_total = 0.0, exp_total = 0.0;
  for (double o : observed) obs_total += o;
  for (double e : expected) exp_total += e;
  if (!(exp_total > 0.0) || !(obs_total > 0.0)) throw DomainError("chi_square_test: empty histogram");
  const double scale = obs_total / exp_total;

  std::vector<std::pair<double, double>> groups;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o_acc += observed[i];
    e_acc += expected[i] * scale;
    if (e_acc >= 5.0) {
      groups.emplace_back(o_acc, e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (groups.empty()) groups.emplace_back(o_acc, e_acc);
    else {
      groups.back().first += o_acc;
      groups.back().second += e_acc;
    }
  }
  if (groups.size() < 2) throw DomainError("chi_square_test: insufficient counts after pooling sparse bins");

  ChiSquareResult r;
  for (const auto& [o, e] : groups) r.statistic += (o - e) * (o - e) / e;
  r.pooled_bins = groups.size();
  r.dof = static_cast<int>(groups.size()) - 1;
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

ChiSquareResult chi_square_test(const JointHistogram& observed, const JointHistogram& expected) {
  if (!observed.same_axes(expected)) throw DomainError("chi_square_test: axes differ");
  return chi_square_test(observed.counts(), expected.counts());
}

double kolmogorov_sf(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-17) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.size() < 10) throw DomainError("ks_test: need at least 10 samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  KsResult r;
  r.statistic = d;
  r.n = samples.size();
  const double sq = std::sqrt(n);
  r.p_value = kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d);
  return r;
}

}  // namespace bhl
