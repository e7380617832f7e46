#pragma once

#include <stdexcept>
#include <string>

namespace trendsim {

// Bad or incomplete input data: unreadable files, unparsable values,
// empty cells, transform domain violations. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: degenerate variances, non-PSD matrices beyond repair,
// root finder non-convergence. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace trendsim
