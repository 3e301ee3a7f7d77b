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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace bhl {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// Semicolon-joined list, as used for variable-length CSV fields.
template <typename Range, typename Fmt>
std::string join_semicolon(const Range& r, Fmt fmt) {
  std::string out;
  bool first = true;
  for (const auto& x : r) {
    if (!first) out += ';';
    out += fmt(x);
    first = false;
  }
  return out;
}

/// Writes the whole file at once; throws IoError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);
void ensure_directory(const std::filesystem::path& dir);

}  // namespace bhl
