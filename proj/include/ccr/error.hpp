#pragma once

#include <stdexcept>
#include <string>

namespace ccr {

// Exit codes used by the command-line tool. Each error class maps to one.
enum class ExitCode : int {
  ok = 0,
  config = 2,
  data = 3,
  backend = 4,
  numerical = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid configuration, bad flag values, violated parameter preconditions.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::config, what) {}
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::data, what) {}
};

/// Embedding backend unavailable or misbehaving.
class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what) : Error(ExitCode::backend, what) {}
};

/// NaN/Inf or otherwise degenerate numerics.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ExitCode::numerical, what) {}
};

/// Throws an error of the same class as `e` with `prefix` prepended.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& prefix) {
  const std::string what = prefix + e.what();
  switch (e.code()) {
    case ExitCode::config: throw ConfigError(what);
    case ExitCode::data: throw DataError(what);
    case ExitCode::backend: throw BackendError(what);
    case ExitCode::numerical: throw NumericalError(what);
    case ExitCode::ok: break;
  }
  throw Error(e.code(), what);
}

}  // namespace ccr
