#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace urbanrisk {

// Caller passed a value outside an operation's documented domain.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation invoked on an object that is not ready for it (e.g. untrained model).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an input would leak held-out information into training or prompts.
class LeakageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ServiceUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FieldError {
  std::string field;
  std::string message;
};

class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<FieldError> fields)
      : std::invalid_argument(summarize(fields)), fields_(std::move(fields)) {}

  const std::vector<FieldError>& fields() const noexcept { return fields_; }

 private:
  static std::string summarize(const std::vector<FieldError>& fields) {
    std::string out = "validation failed:";
    for (const auto& f : fields) out += " " + f.field + ": " + f.message + ";";
    return out;
  }

  std::vector<FieldError> fields_;
};

}  // namespace urbanrisk
