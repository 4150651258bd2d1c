#pragma once

#include <stdexcept>
#include <string>

namespace convext {

enum class ErrorKind {
  Domain,         // input outside the mathematical domain of an operation
  Shape,          // grid specs do not match
  Configuration,  // grids or parameters inconsistent with each other
  Parameter,      // a scalar parameter is out of range
  Contract,       // a callee broke its postcondition
  Input,          // malformed or invalid user input (files, descriptors)
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace convext
