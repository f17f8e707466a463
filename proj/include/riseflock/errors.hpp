#pragma once

#include <stdexcept>
#include <string>

namespace riseflock {

/// Malformed input: bad topology, config, dimensions, grids.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trace is too short for the requested computation.
class InsufficientDataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical failure: singular matrices, non-convergent eigen routines,
/// non-finite evaluations.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The integrator produced a non-finite state. Carries the first offending
/// agent (0-based; -1 for the target) and the time of failure.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int agent, double time)
      : std::runtime_error(what), agent_(agent), time_(time) {}

  int agent() const { return agent_; }
  double time() const { return time_; }

 private:
  int agent_;
  double time_;
};

}  // namespace riseflock
