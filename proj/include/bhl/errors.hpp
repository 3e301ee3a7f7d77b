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

#include <stdexcept>
#include <string>

namespace bhl {

/// Failure categories. The numeric values are the C API status codes.
enum class ErrorKind : int {
  Config = 2,
  Numerics = 3,
  Domain = 4,
  Capacity = 5,
  Io = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct NumericsError : Error {
  explicit NumericsError(const std::string& what) : Error(ErrorKind::Numerics, what) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

// Survival probability too small to condition on.
struct DegenerateConditioning : Error {
  explicit DegenerateConditioning(const std::string& what) : Error(ErrorKind::Numerics, what) {}
};

// Tree outgrew max_nodes, or an exact computation outgrew its budget.
struct CapacityError : Error {
  explicit CapacityError(const std::string& what) : Error(ErrorKind::Capacity, what) {}
};

struct PopulationCapExceeded : CapacityError {
  explicit PopulationCapExceeded(const std::string& what) : CapacityError(what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

}  // namespace bhl
