#pragma once

#include <stdexcept>
#include <string>

namespace cgl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (dimension, grid size, exponent, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Requested feature is finer than the grid can represent.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Configuration rejected; `path()` names the offending key (e.g. "step.tol").
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace cgl
