#pragma once

#include <stdexcept>
#include <string>

namespace sparsecov {

/// File access or parse failure (CLI exit code 2).
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: singular systems, non-finite values, degenerate
/// spectra (CLI exit code 3). Invalid arguments and configuration errors
/// use std::invalid_argument (CLI exit code 1).
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sparsecov
