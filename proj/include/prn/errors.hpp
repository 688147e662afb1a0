#pragma once

#include <stdexcept>
#include <string>

namespace prn {

// Thrown when an operation receives out-of-range or inconsistent arguments.
struct InvalidParam : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when tensor or sequence shapes disagree.
struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a pairwise score is requested for a candidate that does not
// precede the span it would be an antecedent of.
struct OrderViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Thrown when a file cannot be opened, read, or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace prn
