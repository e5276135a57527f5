#ifndef LSPK_ERROR_HPP
#define LSPK_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lspk {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are not conformable.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A 1-based row or slice index is outside its valid range.
class IndexError : public Error {
public:
  using Error::Error;
};

/// Invalid regularization, step-size or schedule parameters.
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Inverse transform left an imaginary residue above tolerance.
class NonRealResultError : public Error {
public:
  using Error::Error;
};

/// Factorization failure (e.g. per-face SVD) or another numerical breakdown.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Non-finite iterate encountered in a solver.
class DivergenceError : public NumericalError {
public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : NumericalError(what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

private:
  std::size_t iteration_;
};

/// Kaczmarz row block with zero Frobenius norm.
class DegenerateRowError : public Error {
public:
  using Error::Error;
};

/// Metric undefined for the given inputs (e.g. zero reference tensor).
class MetricError : public Error {
public:
  using Error::Error;
};

/// Malformed tensor file.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace lspk

#endif  // LSPK_ERROR_HPP
