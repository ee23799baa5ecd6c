#pragma once

#include <stdexcept>
#include <string>

namespace irrlyap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree. The message names the offending operand.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A factorization failed, a value became non-finite, or an iterate left the
/// manifold of full-rank factors.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the file name and line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, long line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}

  const std::string& file() const { return file_; }
  long line() const { return line_; }

 private:
  std::string file_;
  long line_;
};

/// Invalid configuration or precondition violation by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace irrlyap
