#pragma once

#include <stdexcept>
#include <string>

namespace archstyle {

// Caller supplied something malformed: mismatched dims, bad parameters,
// missing files. The CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedFormatError : public IoError {
 public:
  using IoError::IoError;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A loss term evaluated to NaN or infinity. `term()` names the offender.
class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(std::string term, const std::string& what)
      : std::runtime_error(what), term_(std::move(term)) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

}  // namespace archstyle
