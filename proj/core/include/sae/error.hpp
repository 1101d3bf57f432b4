#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sae {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed JSON input. `byte_offset` points at the offending byte.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// Well-formed input that violates a data invariant.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::string example_id)
      : Error(what), example_id_(std::move(example_id)) {}
  const std::string& example_id() const noexcept { return example_id_; }

 private:
  std::string example_id_;
};

/// Binary container problems (bad magic, unsupported version).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Binary container whose payload disagrees with its header.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes disagree when building a computation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A requested embedding slot is absent from an interchange store.
class MissingSlotError : public Error {
 public:
  using Error::Error;
};

}  // namespace sae
