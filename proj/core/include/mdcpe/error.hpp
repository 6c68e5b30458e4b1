// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mdcpe {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidClass : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

class InsufficientClass : public Error {
 public:
  using Error::Error;
};

class EmptyEvaluation : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file. `offset` is the byte position where parsing
/// stopped.
class FormatError : public Error {
 public:
  enum class Kind { BadMagic, BadVersion, Truncated, Corrupt };

  FormatError(Kind kind, std::uint64_t offset, const std::string& what)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        kind_(kind),
        offset_(offset) {}

  Kind kind() const noexcept { return kind_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::uint64_t offset_;
};

}  // namespace mdcpe
