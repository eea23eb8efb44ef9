#pragma once

#include <stdexcept>
#include <string>

namespace rate {

// Error categories map onto CLI exit codes: schema and argument problems are
// caller mistakes (2), positivity failures are data problems (3).
enum class ErrorKind {
  kSchema,
  kInvalidArgument,
  kPositivity,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what)
      : Error(ErrorKind::kSchema, what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorKind::kInvalidArgument, what) {}
};

class PositivityError : public Error {
 public:
  explicit PositivityError(const std::string& what)
      : Error(ErrorKind::kPositivity, what) {}
};

}  // namespace rate
