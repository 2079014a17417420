#pragma once

#include <stdexcept>
#include <string>

namespace aerialvp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied something malformed (bad argument, empty instruction, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public InputError {
 public:
  using InputError::InputError;
};

/// Registry validation / conflict errors.
class RegistryError : public InputError {
 public:
  using InputError::InputError;
};

class ConflictError : public RegistryError {
 public:
  using RegistryError::RegistryError;
};

class NoToolAvailableError : public Error {
 public:
  using Error::Error;
};

/// Tool arguments violate the tool's input schema. Raised before any I/O.
class ArgumentError : public InputError {
 public:
  using InputError::InputError;
};

class EndpointUnreachableError : public Error {
 public:
  using Error::Error;
};

/// Peer answered with something that is not the expected protocol shape.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class BackendError : public Error {
 public:
  BackendError(const std::string& what, int status = 0)
      : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class AnalysisError : public Error {
 public:
  AnalysisError(const std::string& what, std::string raw_output = {})
      : Error(what), raw_output_(std::move(raw_output)) {}
  const std::string& raw_output() const noexcept { return raw_output_; }

 private:
  std::string raw_output_;
};

class PlanningError : public Error {
 public:
  using Error::Error;
};

class PerceptionError : public Error {
 public:
  using Error::Error;
};

class LoadError : public InputError {
 public:
  LoadError(const std::string& what, std::size_t line = 0)
      : InputError(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace aerialvp
