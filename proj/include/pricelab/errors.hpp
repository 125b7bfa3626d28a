#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace pricelab {

// Bad user-supplied configuration. `path` names the offending field with a
// dotted path, e.g. "design.table".
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what),
        path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// A model assumption failed at runtime (non-positive fitted slope,
// uncertified contraction, degenerate conditionals).
class AssumptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure inside a solver (singular system, non-convergence where
// convergence is a precondition).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pricelab
