#pragma once

#include <stdexcept>
#include <string>

namespace overparam {

// Invalid arguments, malformed files, unsatisfiable preconditions.
// The CLI maps this family to exit code 1.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Raised by solve_spd when the matrix is not positive definite.
class SingularMatrixError : public InputError {
 public:
  SingularMatrixError(const std::string& what, double min_eigenvalue)
      : InputError(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, long line)
      : InputError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Training aborted because the loss became non-finite or exceeded the
// divergence guard. The CLI maps this to exit code 2.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
        step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace overparam
