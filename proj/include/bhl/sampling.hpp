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
#include <optional>
#include <string>
#include <vector>

#include "bhl/simulator.hpp"

namespace bhl {

enum class Scheme { UniformMarker, Palm, Leftmost };

std::string scheme_name(Scheme s);
/// Accepts "uniform", "palm", "leftmost"; throws ConfigError otherwise.
Scheme parse_scheme(const std::string& name);

/// Reproduction times and sizes along one sampled ancestral lineage.
struct LineageRecord {
  Scheme scheme = Scheme::UniformMarker;
  bool survived = false;
  std::vector<double> times;
  std::vector<int> sizes;
  /// Leftmost only: extinct siblings skipped before the lineage child.
  std::vector<int> left_extinct;
  /// UniformMarker only: the largest marker.
  std::optional<double> marker;
  double weight = 1.0;
  /// Sampled individual, for debugging.
  std::optional<NodeId> node;

  std::size_t events() const noexcept { return times.size(); }
};

/// Attaches i.i.d. Unif[0,1] markers to the alive individuals and follows
/// the one with the largest marker. Extinct trees give survived = false.
LineageRecord sample_uniform_marker(const Tree& tree, RngStream& rng);

/// One weight-1 record per alive individual.
std::vector<LineageRecord> sample_palm(const Tree& tree);

/// First surviving child in birth order at every reproduction event.
LineageRecord sample_leftmost(const Tree& tree);

}  // namespace bhl
