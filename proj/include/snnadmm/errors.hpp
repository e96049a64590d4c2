#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace snnadmm {

// Raised when an argument violates a documented precondition.
class InvalidInputError : public std::invalid_argument {
 public:
  explicit InvalidInputError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when a factorization or linear solve cannot be completed.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when training produces a non-finite objective value.
class DivergenceError : public NumericalError {
 public:
  explicit DivergenceError(const std::string& what) : NumericalError(what) {}
};

// Raised on malformed serialized data; `offset` is the byte position of the
// first defect.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Raised on filesystem failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a weight reduction is attempted with worker results missing.
class IncompleteRoundError : public std::runtime_error {
 public:
  explicit IncompleteRoundError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace snnadmm
