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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bhl/sampling.hpp"

namespace bhl {

struct Axis {
  std::string name;
  std::vector<double> edges;

  std::size_t bins() const noexcept { return edges.empty() ? 0 : edges.size() - 1; }
};

Axis uniform_axis(std::string name, double lo, double hi, std::size_t bins);

/// Dense multi-dimensional histogram of weights. Bins are half-open
/// [lo, hi) except the last bin of each axis, which also holds its upper edge.
class JointHistogram {
 public:
  explicit JointHistogram(std::vector<Axis> axes);

  const std::vector<Axis>& axes() const noexcept { return axes_; }
  std::size_t size() const noexcept { return counts_.size(); }
  std::span<const double> counts() const noexcept { return counts_; }
  double count(std::size_t flat) const { return counts_.at(flat); }
  double total_weight() const noexcept { return total_weight_; }

  /// Number of trials behind the counts (all trees, extinct ones included).
  std::uint64_t n_trials() const noexcept { return n_trials_; }
  void set_n_trials(std::uint64_t n) noexcept { n_trials_ = n; }
  std::uint64_t out_of_range() const noexcept { return out_of_range_; }
  void note_out_of_range(std::uint64_t n = 1) noexcept { out_of_range_ += n; }

  std::optional<std::size_t> locate(std::span<const double> point) const;
  /// Adds weight at point; out-of-range points are counted, never dropped silently.
  bool add(std::span<const double> point, double weight = 1.0);
  void add_to_bin(std::size_t flat, double weight);
  /// Exact addition; throws DomainError on axis mismatch.
  void merge(const JointHistogram& other);

  std::vector<std::size_t> unravel(std::size_t flat) const;
  /// (lo, hi) per axis.
  std::vector<std::pair<double, double>> bin_bounds(std::size_t flat) const;

  bool same_axes(const JointHistogram& other) const;

 private:
  std::vector<Axis> axes_;
  std::vector<double> counts_;
  double total_weight_ = 0.0;
  std::uint64_t n_trials_ = 0;
  std::uint64_t out_of_range_ = 0;
};

/// Which lineages enter a histogram: exact event count, sizes and ks.
struct RecordFilter {
  std::optional<std::size_t> events;
  std::optional<std::vector<int>> sizes;
  std::optional<std::vector<int>> ks;

  bool matches(const LineageRecord& rec) const;
};

/// Record coordinate by axis name: "t<i>", "l<i>", "k<i>" (1-based), "S" or "J".
std::optional<double> record_coordinate(const LineageRecord& rec, const std::string& name);

/// Bins the weights of surviving records that pass the filter.
JointHistogram bin_records(std::span<const LineageRecord> records, std::vector<Axis> axes, const RecordFilter& filter,
                           std::uint64_t n_trials);

using DensityFn = std::function<double(std::span<const double>)>;

/// Per-bin tensor-product Simpson integral of a density, `order` (odd, >= 3)
/// nodes per axis per bin. Throws NumericsError on non-finite values.
JointHistogram expected_histogram(const DensityFn& density, std::vector<Axis> axes, int order = 5);

/// Half the L1 distance between the two normalized histograms.
double tv_distance(const JointHistogram& a, const JointHistogram& b);

/// Half the sum of per-bin binomial standard errors sqrt(p(1-p)/n) for bin
/// proportions p of a normalized histogram: the scale of TV under sampling noise.
double tv_mc_error(const JointHistogram& reference, double n);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  std::size_t pooled_bins = 0;
};

/// Pearson goodness of fit. Expected masses are scaled to the observed total;
/// adjacent bins (flat order) are pooled until every expected count is >= 5.
ChiSquareResult chi_square_test(const JointHistogram& observed, const JointHistogram& expected);
ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> expected);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// One-sample Kolmogorov-Smirnov with the asymptotic p-value.
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);

/// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_sf(double lambda);
double chi_square_sf(double x, double dof);

}  // namespace bhl
