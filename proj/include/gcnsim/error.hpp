#pragma once

#include <stdexcept>
#include <string>

namespace gcnsim {

// Base of every error raised by the library. The CLI maps SchemaError and
// InvariantError to exit code 2 and everything else to 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scenario document problems carry the JSON pointer of the offending field.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class SchemaError : public ScenarioError {
 public:
  using ScenarioError::ScenarioError;
};

class InvariantError : public ScenarioError {
 public:
  using ScenarioError::ScenarioError;
};

class UnknownGcs : public Error {
 public:
  using Error::Error;
};

class UnpoweredDemand : public Error {
 public:
  using Error::Error;
};

class EmptyVector : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

class Unreachable : public Error {
 public:
  using Error::Error;
};

class UnknownDataNode : public Error {
 public:
  using Error::Error;
};

class CapacityExhausted : public Error {
 public:
  using Error::Error;
};

class ScenarioMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gcnsim
