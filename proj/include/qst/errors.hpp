#pragma once

#include <stdexcept>
#include <string>

namespace qst {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidSpec : public Error {
public:
  using Error::Error;
};

class NoConvergence : public Error {
public:
  using Error::Error;
};

/// A trigonometric factor of F, S or A vanished at the evaluation point.
class PoleAt : public Error {
public:
  PoleAt(std::string factor, double theta)
      : Error("pole of " + factor + " at theta=" + std::to_string(theta)),
        factor_(std::move(factor)), theta_(theta) {}

  const std::string& factor() const noexcept { return factor_; }
  double theta() const noexcept { return theta_; }

private:
  std::string factor_;
  double theta_;
};

class NoSignChange : public Error {
public:
  using Error::Error;
};

class PoleInBracket : public Error {
public:
  using Error::Error;
};

class DegenerateLambda : public Error {
public:
  using Error::Error;
};

/// No integer m puts 8m+1 strictly inside (lower, upper).
class NoFeasibleM : public Error {
public:
  NoFeasibleM(double lower, double upper, long min_k)
      : Error("no integer 8m+1 in (" + std::to_string(lower) + ", " +
              std::to_string(upper) + "); k >= " + std::to_string(min_k) +
              " guarantees one"),
        lower_(lower), upper_(upper), min_k_(min_k) {}

  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  /// Smallest k for which the window is at least 8 wide (so always feasible).
  long min_k() const noexcept { return min_k_; }

private:
  double lower_;
  double upper_;
  long min_k_;
};

class RootFailure : public Error {
public:
  using Error::Error;
};

class SizeGuard : public Error {
public:
  using Error::Error;
};

}  // namespace qst
