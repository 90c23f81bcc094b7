#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scvad {

// Base for every error raised by the library. The CLI maps the subclasses
// onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or dimension disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or violated precondition on caller-supplied values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed, truncated or unreadable files.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A feature vector carries a NaN or infinity.
class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, std::size_t position)
      : Error(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// Optimisation produced a non-finite loss.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t epoch, std::size_t iteration)
      : Error(what), epoch_(epoch), iteration_(iteration) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t epoch_;
  std::size_t iteration_;
};

}  // namespace scvad
