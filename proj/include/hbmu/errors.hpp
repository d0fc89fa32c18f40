#pragma once

#include <stdexcept>
#include <string>

namespace hbmu {

// Bad shapes, missing fields, violated preconditions.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Factorization failures and other floating-point breakdowns.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A hyperparameter fixed point hit its iteration cap. `last_value` is the
// largest-magnitude component of the final iterate's relative change, and
// `iterations` the number of sweeps performed.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, int iterations, double last_change)
      : std::runtime_error(what), iterations_(iterations), last_change_(last_change) {}

  int iterations() const noexcept { return iterations_; }
  double last_change() const noexcept { return last_change_; }

 private:
  int iterations_;
  double last_change_;
};

// Wraps an error raised inside the Gibbs loop with the iteration it came from.
template <typename Base>
class AtIteration : public Base {
 public:
  AtIteration(const Base& inner, long iteration)
      : Base(inner), iteration_(iteration),
        message_("iteration " + std::to_string(iteration) + ": " + inner.what()) {}

  long iteration() const noexcept { return iteration_; }
  const char* what() const noexcept override { return message_.c_str(); }

 private:
  long iteration_;
  std::string message_;
};

}  // namespace hbmu
