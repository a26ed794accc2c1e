#pragma once

#include <stdexcept>
#include <string>

namespace slipnet {

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct OutOfBounds : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Regression needs at least as many samples as basis functions.
struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All sample speeds identical; the Gaussian design has no spread to fit.
struct DegenerateDesign : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised by the CLI layer for a missing upstream artifact; exit code 2.
struct MissingInput : std::runtime_error {
  explicit MissingInput(const std::string& path)
      : std::runtime_error("missing input: " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace slipnet
