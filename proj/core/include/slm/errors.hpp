#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace slm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (ragged matrices, bad files, bad config lines).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Requested feature or parameter combination is not supported.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// File system failure; carries the offending path.
class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Non-finite values encountered inside an iterative method.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, int iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// A scalar root/minimum search ran out of iterations. The last bracket is kept.
class IterationLimitError : public Error {
 public:
  IterationLimitError(const std::string& what, double lo, double hi);
  double lower() const noexcept { return lo_; }
  double upper() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// Dense Cholesky factorization failed (matrix not positive definite).
class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// Newton line search could not decrease the objective. Holds the last iterate.
class StallError : public Error {
 public:
  StallError(const std::string& what, Eigen::VectorXd last)
      : Error(what), last_(std::move(last)) {}
  const Eigen::VectorXd& last_iterate() const noexcept { return last_; }

 private:
  Eigen::VectorXd last_;
};

/// Internal invariant violated (e.g. negative type-B coefficients).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// The variational criterion increased between outer iterations under exact variances.
class MonotonicityError : public Error {
 public:
  MonotonicityError(const std::string& what, int outer, double previous, double current);
  int outer_index() const noexcept { return outer_; }
  double previous() const noexcept { return previous_; }
  double current() const noexcept { return current_; }

 private:
  int outer_;
  double previous_;
  double current_;
};

}  // namespace slm
