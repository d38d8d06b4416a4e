#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairge {

// Bad input text or arguments. Maps to CLI exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

// Numerical failures. Map to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, std::vector<double> residuals)
      : NumericalError(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

class DivergenceError : public NumericalError {
 public:
  DivergenceError(int epoch, const std::string& what)
      : NumericalError("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

// A quantity is mathematically undefined for the given input
// (zero vector in a cosine, empty fairness group, ...).
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class UndefinedMetricError : public DegenerateInputError {
 public:
  using DegenerateInputError::DegenerateInputError;
};

}  // namespace fairge
