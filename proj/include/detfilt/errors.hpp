// Copyright 2026 The detfilt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace detfilt {

// Structural misuse: invalid resolution, mismatched operand shapes, bad
// parameters, malformed configuration files.
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Runtime numeric failure: non-finite intermediate, degenerate variance.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// All particle weights vanished; callers must run a reset path instead of
// treating the result as a number.
class collapse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset-level inconsistency (missing coverage, truncated files).
class validation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace detfilt
