#pragma once

#include <stdexcept>
#include <string>

namespace labelscale {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two rasters that must share a shape do not.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A valid request the library deliberately does not support
/// (e.g. the five-step filter on a label set other than {0,128,255}).
class UnsupportedConfiguration : public Error {
 public:
  using Error::Error;
};

/// Input data violates a documented precondition (non-canonical mask,
/// mismatched stack ids, malformed table, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// File could not be read, decoded or written.
class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace labelscale
