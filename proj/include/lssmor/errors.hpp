#pragma once

#include <stdexcept>
#include <string>

namespace lssmor {

/// Base class for all library errors.
class LssError : public std::runtime_error {
 public:
  explicit LssError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input data violates a structural precondition (shapes, mode indices, ...).
class ValidationError : public LssError {
 public:
  using LssError::LssError;
};

/// A matrix equation has no unique solution (spectrum overlap, instability).
class IllPosedError : public LssError {
 public:
  using LssError::LssError;
};

/// An iterative computation shows sustained growth instead of convergence.
class DivergenceError : public LssError {
 public:
  using LssError::LssError;
};

/// File-format problem with a source location.
class ParseError : public LssError {
 public:
  ParseError(const std::string& file, int line, const std::string& msg)
      : LssError(file + ":" + std::to_string(line) + ": " + msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace lssmor
