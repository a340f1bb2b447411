#pragma once

#include <stdexcept>
#include <string>

namespace traject {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed, missing or inconsistent data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Too few usable training cases for an estimation procedure.
class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

/// A file produced by an earlier pipeline stage is not present.
class MissingArtifactError : public Error {
 public:
  MissingArtifactError(const std::string& path, const std::string& producer);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace traject
