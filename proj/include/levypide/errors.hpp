#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace levypide {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adaptive quadrature failed to reach its tolerance.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double residual)
      : Error(what + " (residual estimate " + format(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }
  double residual_;
};

/// The big-jump tail of a user-supplied jump law could not be classified.
class MomentUndecidable : public Error {
 public:
  using Error::Error;
};

/// Query outside the time window of a field, or misaligned grids.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A solver mode was requested whose hypotheses the driving noise violates.
class ModeError : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, double required, double allowed)
      : Error(what + ": requires " + std::to_string(required) + " steps, budget " +
              std::to_string(allowed)),
        required_(required),
        allowed_(allowed) {}
  double required() const { return required_; }
  double allowed() const { return allowed_; }

 private:
  double required_;
  double allowed_;
};

/// The spectral reference solver saw its high-mode energy grow past the
/// smoothness threshold.
class BlowupSuspected : public Error {
 public:
  BlowupSuspected(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Monte Carlo signal too weak for the requested estimate.
class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

}  // namespace levypide
