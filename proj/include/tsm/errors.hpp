#pragma once

#include <stdexcept>
#include <string>

namespace tsm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rejection sampling could not find a physically admissible realization.
struct RetryExhausted : Error {
  using Error::Error;
};

/// NaN/Inf encountered during time integration; carries the step index.
struct NonFiniteState : Error {
  int step;
  explicit NonFiniteState(int step_index)
      : Error("non-finite state at step " + std::to_string(step_index) +
              " (time step too large?)"),
        step(step_index) {}
};

/// Moment set and model disagree on the number of fluctuation sources.
struct ShapeMismatch : Error {
  using Error::Error;
};

/// A phase volume fraction reached 0 or 1 within tolerance.
struct DegeneratePhase : Error {
  using Error::Error;
};

struct UnsupportedDistribution : Error {
  using Error::Error;
};

struct OutOfDomain : Error {
  using Error::Error;
};

struct InsufficientSamples : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

}  // namespace tsm
