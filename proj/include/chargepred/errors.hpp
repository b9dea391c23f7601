#pragma once

#include <stdexcept>
#include <string>

namespace chargepred {

// Process exit codes shared by the CLI and the error hierarchy below.
enum class ExitCode : int {
  ok = 0,
  usage = 1,
  io = 2,
  missing_artifact = 3,
  schema_mismatch = 4,
  numeric_failure = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Shape disagreement between operands.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(ExitCode::usage, what) {}
};

// An argument violates the documented domain of an operation.
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error(ExitCode::usage, what) {}
};

// NaN/Inf produced or consumed where finite values are required.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ExitCode::numeric_failure, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ExitCode::io, what) {}
};

// Input records that violate the documented file schema.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::io, what) {}
};

class MissingArtifactError : public Error {
 public:
  explicit MissingArtifactError(const std::string& path)
      : Error(ExitCode::missing_artifact, "missing artifact: " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(ExitCode::schema_mismatch, what) {}
};

}  // namespace chargepred
