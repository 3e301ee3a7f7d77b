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

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bhl/distributions.hpp"
#include "bhl/genfun.hpp"
#include "bhl/sampling.hpp"

namespace bhl {

struct LifetimeConfig {
  std::string law = "exponential";
  double rate = 1.0;
  double value = 1.0;
  double shape = 1.0;
  double scale = 1.0;
  LifetimeLaw make() const;
  bool operator==(const LifetimeConfig&) const = default;
};

struct HistogramConfig {
  int t_bins = 10;
  int s_bins = 10;
  int quadrature_order = 5;
  bool operator==(const HistogramConfig&) const = default;
};

/// Which lineage slice the comparison histograms look at.
struct SliceConfig {
  int j = 1;
  std::vector<int> sizes{2};
  /// Leftmost only; defaults to zeros.
  std::vector<int> ks;
  bool operator==(const SliceConfig&) const = default;
};

struct PredictConfig {
  std::vector<double> t;
  std::vector<int> ell;
  std::vector<double> s;
  bool operator==(const PredictConfig&) const = default;
};

struct ExperimentConfig {
  std::vector<double> offspring{0.5, 0.0, 0.5};
  LifetimeConfig lifetime;
  double horizon = 2.0;
  Scheme scheme = Scheme::UniformMarker;
  std::uint64_t replicates = 1000;
  std::uint64_t base_seed = 1;
  std::uint64_t max_nodes = 1'000'000;
  /// auto, markov, volterra or discrete.
  std::string solver = "auto";
  int steps = 1000;
  int s_points = 201;
  HistogramConfig histogram;
  SliceConfig slice;
  PredictConfig predict;
  std::string output_dir = "bhl_out";
  bool strict_numerics = true;
  /// Per-tree trace CSVs for the first trace_trees replicates.
  std::uint64_t trace_trees = 0;

  OffspringDistribution offspring_distribution() const { return OffspringDistribution(offspring); }
  GenFunOptions genfun_options() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates a JSON config; missing keys take defaults, unknown
/// keys and invalid values throw ConfigError. Grids left empty are filled.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every field, defaults included.
std::string config_to_json(const ExperimentConfig& cfg);
/// Throws ConfigError on inconsistent settings.
void validate_config(const ExperimentConfig& cfg);

GenFunTable build_table(const ExperimentConfig& cfg);

/// Runs f(i) for i in [0, n) on up to `threads` workers. Results must be
/// written by index, so the outcome never depends on the thread count.
/// The first exception thrown by any task is rethrown.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& f) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  constexpr std::size_t chunk = 64;
  auto work = [&] {
    try {
      for (;;) {
        const std::size_t begin = next.fetch_add(chunk);
        if (begin >= n) return;
        for (std::size_t i = begin; i < std::min(n, begin + chunk); ++i) f(i);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      next.store(n);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct ReplicateResult {
  bool overflow = false;
  std::uint64_t population = 0;
  std::vector<LineageRecord> records;
};

struct SimulationResult {
  std::vector<ReplicateResult> replicates;
  /// Replicates that stayed under the node cap.
  std::uint64_t n_trials = 0;
  std::uint64_t overflow = 0;
  std::uint64_t survivors = 0;
  double population_sum = 0.0;
  double population_sq_sum = 0.0;
  std::uint64_t max_population = 0;
};

/// Simulates cfg.replicates trees, replicate i on RngStream(base_seed, i).
/// Throws CapacityError when more than 1e-4 of the trees overflow.
SimulationResult simulate(const ExperimentConfig& cfg, int threads);

/// genfun.csv: t,s,F,dFds.
std::filesystem::path run_genfun(const ExperimentConfig& cfg);
/// lineages.csv and summary.json.
std::filesystem::path run_simulate(const ExperimentConfig& cfg, int threads);
/// predict.csv: t,ell,B,rate,s,s_density.
std::filesystem::path run_predict(const ExperimentConfig& cfg);

struct TestOutcome {
  std::string test;
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  double tv = 0.0;
  std::uint64_t n_trials = 0;
  std::size_t bins = 0;
  bool passed = false;
  std::string detail;
};

struct CompareReport {
  std::vector<TestOutcome> tests;
  bool passed() const;
  const TestOutcome* find(const std::string& name) const;
};

/// Simulates, builds observed and theoretical histograms for the configured
/// scheme and slice, and writes report.json and bins.csv. Fewer than 1000
/// surviving trees is a hard error.
CompareReport run_compare(const ExperimentConfig& cfg, int threads);

/// enumeration.json with the exact lattice laws and the closed forms.
std::filesystem::path run_enumerate(const ExperimentConfig& cfg);

}  // namespace bhl
