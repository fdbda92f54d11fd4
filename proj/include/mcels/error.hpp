#pragma once

#include <stdexcept>
#include <string>

namespace mcels {

  /// Broad failure category; maps 1:1 onto CLI exit codes.
  enum class ErrorKind { usage = 1, data = 2, runtime = 3 };

  class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    const char* kind_name() const noexcept {
      switch (kind_) {
        case ErrorKind::usage: return "usage";
        case ErrorKind::data: return "data";
        case ErrorKind::runtime: return "runtime";
      }
      return "runtime";
    }

  private:
    ErrorKind kind_;
  };

  /// Malformed input files, shape mismatches, invalid datasets.
  class DataError : public Error {
  public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
  };

  /// Invalid arguments or configuration values.
  class UsageError : public Error {
  public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
  };

  /// Non-finite losses and other numeric failures during optimization.
  class NumericError : public Error {
  public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::runtime, what) {}
  };

  /// The background set holds no instance of the requested target class.
  class NoNeighborError : public Error {
  public:
    explicit NoNeighborError(const std::string& what) : Error(ErrorKind::runtime, what) {}
  };

} // namespace mcels
