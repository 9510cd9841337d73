#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace moedti {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand shapes do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An operation produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

// An API precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Bad configuration key, value, or combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File could not be read/written or has the wrong format.
class IoError : public Error {
 public:
  using Error::Error;
};

// Text parse failure. Carries a machine-readable kind and the byte
// offset of the offending character (end-of-input errors report the
// input length).
class ParseError : public Error {
 public:
  ParseError(std::string kind, std::size_t offset, const std::string& msg)
      : Error(msg), kind_(std::move(kind)), offset_(offset) {}

  const std::string& kind() const { return kind_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string kind_;
  std::size_t offset_;
};

}  // namespace moedti
