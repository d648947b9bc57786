#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace lsrecon {

template <int Dim>
using Vec = Eigen::Matrix<double, Dim, 1>;

using LeafIndex = std::uint32_t;
inline constexpr LeafIndex kNoLeaf = std::numeric_limits<LeafIndex>::max();

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Error taxonomy. The CLI maps these onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A point or foot fell outside [-M, M]^n.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A precondition of an operation was not met by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Lost interface, empty band, runaway iteration: the evolution cannot go on.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

template <class T>
constexpr T square(T x) {
  return x * x;
}

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace lsrecon
