#pragma once

#include <stdexcept>
#include <string>

namespace skipnet {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition (non-scalar loss, empty batch, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnknownIdError : public Error {
 public:
  explicit UnknownIdError(std::string id)
      : Error("unknown track id '" + id + "'"), id_(std::move(id)) {}

  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class OracleError : public Error {
 public:
  using Error::Error;
};

class CorruptCheckpoint : public Error {
 public:
  using Error::Error;
};

}  // namespace skipnet
