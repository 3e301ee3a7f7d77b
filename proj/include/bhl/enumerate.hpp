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
#include <map>
#include <utility>
#include <vector>

#include "bhl/distributions.hpp"

namespace bhl {

/// Exact lineage laws of a discrete-time Galton-Watson tree (lifetime
/// delta_1) up to generation n, obtained by visiting every genealogy.
struct ExactLineageLaw {
  int generations = 0;
  /// P(N_n = 0).
  double extinction = 0.0;
  /// E[N_n].
  double mean_population = 0.0;
  /// Uniform pick: P(N_n > 0, L = l).
  std::map<std::vector<int>, double> uniform;
  /// Leftmost surviving lineage: P(N_n > 0, L = l, K = k).
  std::map<std::pair<std::vector<int>, std::vector<int>>, double> leftmost;
  /// Palm weight: E[#{v alive at n : L(v) = l}].
  std::map<std::vector<int>, double> palm;
  /// Number of genealogies visited.
  std::size_t genealogies = 0;
};

/// Throws CapacityError once more than `budget` genealogies would be visited.
ExactLineageLaw enumerate_lattice(const OffspringDistribution& d, int generations, std::size_t budget = 10'000'000);

}  // namespace bhl
