#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace aniso {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(long expected, long got)
      : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
              std::to_string(got)) {}
};

class NonFiniteInput : public Error {
 public:
  explicit NonFiniteInput(const std::string& where) : Error("non-finite input in " + where) {}
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative solve stopped before reaching its tolerance.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// The operator is genuinely set-valued at the requested point.
class SetValuedAt : public Error {
 public:
  using Error::Error;
};

class NotAffine : public Error {
 public:
  NotAffine() : Error("operation requires an affine operator") {}
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class UnsupportedGStar : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

inline void require_dim(const Vec& x, long n) {
  if (x.size() != n) throw DimensionMismatch(n, x.size());
}

inline void require_finite(const Vec& x, const char* where) {
  if (!x.allFinite()) throw NonFiniteInput(where);
}

}  // namespace aniso
