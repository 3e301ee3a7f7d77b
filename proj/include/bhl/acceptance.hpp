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
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace bhl {

struct AcceptanceResult {
  std::string id;
  std::string title;
  bool passed = false;
  /// Deterministic summary; timings live only in `seconds`.
  std::string detail;
  double seconds = 0.0;
  double limit_seconds = 0.0;
};

struct AcceptanceOptions {
  std::filesystem::path out_dir = "bhl_selftest";
  int threads = 1;
  std::uint64_t seed = 20260917;
};

/// Runs AC-1 through AC-7, writing artifacts under out_dir (one directory per
/// criterion plus acceptance.json). Artifacts depend only on the seed, never
/// on the thread count or timing. on_result fires after each criterion.
std::vector<AcceptanceResult> run_acceptance(const AcceptanceOptions& opts,
                                             const std::function<void(const AcceptanceResult&)>& on_result = {});

/// All regular files below dir, relative paths in sorted order.
std::vector<std::filesystem::path> list_artifacts(const std::filesystem::path& dir);

/// Empty when every artifact in a matches the one in b byte for byte;
/// otherwise the first difference.
std::string compare_artifact_trees(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace bhl
