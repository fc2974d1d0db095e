// Copyright 2026 The relab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace relab {

/// Process exit status associated with each error family.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kData = 3,
  kSolver = 4,
};

/// Base of every error thrown by the library. `name()` is the stable
/// identifier printed by the CLI.
class Error : public std::runtime_error {
 public:
  Error(const char* name, ExitCode code, const std::string& what)
      : std::runtime_error(what), name_(name), code_(code) {}

  const char* name() const noexcept { return name_; }
  ExitCode exit_code() const noexcept { return code_; }

 private:
  const char* name_;
  ExitCode code_;
};

#define RELAB_DEFINE_ERROR(Type, Code)                           \
  class Type : public Error {                                    \
   public:                                                       \
    explicit Type(const std::string& what)                       \
        : Error(#Type, ExitCode::Code, what) {}                  \
  }

RELAB_DEFINE_ERROR(ConfigError, kConfig);
RELAB_DEFINE_ERROR(GenerationError, kConfig);
RELAB_DEFINE_ERROR(FormatError, kData);
RELAB_DEFINE_ERROR(DataError, kData);
RELAB_DEFINE_ERROR(DegenerateInputError, kData);
RELAB_DEFINE_ERROR(IndexError, kData);
RELAB_DEFINE_ERROR(TrainingDivergedError, kSolver);

#undef RELAB_DEFINE_ERROR

/// Raised by normalization when some nodes have zero degree.
class IsolatedNodeError : public Error {
 public:
  explicit IsolatedNodeError(std::vector<std::size_t> nodes)
      : Error("IsolatedNodeError", ExitCode::kData, describe(nodes)),
        nodes_(std::move(nodes)) {}

  const std::vector<std::size_t>& nodes() const noexcept { return nodes_; }

 private:
  static std::string describe(const std::vector<std::size_t>& nodes) {
    std::string msg = "graph has " + std::to_string(nodes.size()) +
                      " isolated node(s):";
    constexpr std::size_t kMaxListed = 20;
    for (std::size_t i = 0; i < nodes.size() && i < kMaxListed; ++i)
      msg += ' ' + std::to_string(nodes[i]);
    if (nodes.size() > kMaxListed) msg += " ...";
    return msg;
  }

  std::vector<std::size_t> nodes_;
};

/// Raised when an iterative solve fails to reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error("SolverError", ExitCode::kSolver, what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace relab
