#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwve {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad expression text, invalid law parameters, schema
/// violations, out-of-horizon requests.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t offset, std::vector<std::string> expected,
             const std::string& what);

  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

class EvalError : public ValidationError {
 public:
  enum class Kind { Domain, Overflow };
  EvalError(Kind kind, const std::string& what) : ValidationError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class FamilyMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical failures: truncation too aggressive, degenerate inputs,
/// quantities outside the domain of a formula.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public NumericalError {
 public:
  TruncationError(double tail_mass, std::size_t k, const std::string& what)
      : NumericalError(what), tail_mass_(tail_mass), k_(k) {}
  double tail_mass() const noexcept { return tail_mass_; }
  std::size_t truncation() const noexcept { return k_; }
  std::size_t suggested_truncation() const noexcept { return 2 * k_; }

 private:
  double tail_mass_;
  std::size_t k_;
};

class ZeroMeanError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateLawError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TailTooHeavy : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EmptySample : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Monte Carlo budget failures.
class SimulationError : public Error {
 public:
  using Error::Error;
};

class CapError : public SimulationError {
 public:
  using SimulationError::SimulationError;
};

class RejectionBudgetExceeded : public SimulationError {
 public:
  using SimulationError::SimulationError;
};

}  // namespace gwve
