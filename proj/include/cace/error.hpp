// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cace {

// Bad arguments or violated preconditions.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Solver failures, non-finite results.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent experiment configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ArgumentError(what);
}

}  // namespace cace
