#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace riemopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NotSymmetric : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(std::size_t pivot, const std::string& what)
      : Error(what + " (pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class RankDeficient : public Error {
 public:
  explicit RankDeficient(std::size_t column)
      : Error("rank-deficient input at column " + std::to_string(column)),
        column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class Singular : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& routine, std::size_t iterations)
      : Error(routine + " did not converge after " + std::to_string(iterations) +
              " iterations"),
        iterations_(iterations) {}
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

/// Input has no well-defined image (zero vector normalized, etc.).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// Operator has no closed form on this manifold; use the fallback.
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Logarithm requested at or beyond the cut locus.
class CutLocus : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NonFiniteGradient : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class CorruptCheckpoint : public Error {
 public:
  using Error::Error;
};

class NonFiniteObjective : public Error {
 public:
  using Error::Error;
};

/// Finite differences disagree across a kink; the gradient is undefined.
class UnstableGradient : public NonFiniteObjective {
 public:
  using NonFiniteObjective::NonFiniteObjective;
};

class UnknownProblem : public Error {
 public:
  using Error::Error;
};

}  // namespace riemopt
