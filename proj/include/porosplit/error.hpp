#pragma once

#include <stdexcept>
#include <string>

namespace porosplit {

enum class ErrorCode {
  InvalidArgument,
  InvalidMaterial,
  Config,
  Solver,
  NotConverged,
  SizeMismatch,
  Io,
};

/// Base exception of the library. The code maps one-to-one onto the C API
/// status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class MaterialError : public Error {
 public:
  explicit MaterialError(const std::string& what)
      : Error(ErrorCode::InvalidMaterial, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::Config, what) {}
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& what) : Error(ErrorCode::Solver, what) {}
};

class SizeMismatchError : public Error {
 public:
  explicit SizeMismatchError(const std::string& what)
      : Error(ErrorCode::SizeMismatch, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::Io, what) {}
};

}  // namespace porosplit
