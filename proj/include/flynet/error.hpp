#pragma once

#include <stdexcept>
#include <string>

namespace flynet {

/// Base class for every error raised by the library. `exit_code()` maps the
/// failure onto the process exit status used by the command line tool.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Invalid configuration values, unknown config keys, bad CLI arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Missing, empty, corrupt or mismatched input data.
class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Non-finite values or other numerical breakdowns.
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

}  // namespace flynet
