#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jpose {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The logarithm was requested at (or numerically at) a rotation of pi.
class SingularLog : public Error {
 public:
  explicit SingularLog(double angle);
  double angle() const { return angle_; }

 private:
  double angle_;
};

class KeyNotFound : public Error {
 public:
  using Error::Error;
};

/// A propagated covariance came out indefinite beyond tolerance.
class NumericalDegeneracy : public Error {
 public:
  using Error::Error;
};

class GimbalLock : public Error {
 public:
  explicit GimbalLock(double pitch);
  double pitch() const { return pitch_; }

 private:
  double pitch_;
};

class ConversionFailure : public Error {
 public:
  using Error::Error;
};

class SigmaPointSingularity : public Error {
 public:
  SigmaPointSingularity(std::size_t point, std::size_t pose, double angle);
  std::size_t point() const { return point_; }
  std::size_t pose() const { return pose_; }

 private:
  std::size_t point_;
  std::size_t pose_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class RankDeficiency : public Error {
 public:
  using Error::Error;
};

class Divergence : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public Error {
 public:
  InvalidSpec(const std::string& what, long failing_pivot);
  long failing_pivot() const { return failing_pivot_; }

 private:
  long failing_pivot_;
};

}  // namespace jpose
