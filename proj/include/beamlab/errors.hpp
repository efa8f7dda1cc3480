#pragma once

#include <stdexcept>
#include <string>

namespace beamlab {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorKind : int {
  kConfig = 2,
  kIo = 3,
  kContract = 4,
  kNumeric = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

// Invalid or inconsistent configuration values.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

// File system and parse failures.
struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

// Violated preconditions: domain, shape and geometry errors.
struct ContractError : Error {
  explicit ContractError(const std::string& what) : Error(ErrorKind::kContract, what) {}
};

// Non-finite values where finite ones are required (e.g. diverged training).
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorKind::kNumeric, what) {}
};

}  // namespace beamlab
