#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace vexmatch {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition or invariant violation on caller-supplied values.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input document. Carries the byte offset (for syntax errors)
/// or a JSON pointer path (for structural errors) when known.
class ParseError : public Error {
 public:
  ParseError(const std::string &what, std::string path, std::size_t offset = npos)
      : Error(what), path_(std::move(path)), offset_(offset) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  const std::string &path() const noexcept { return path_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string path_;
  std::size_t offset_;
};

/// Zero or several format sniffers accepted one document.
class AmbiguousFormatError : public Error {
 public:
  AmbiguousFormatError(const std::string &what, std::vector<std::string> candidates)
      : Error(what), candidates_(std::move(candidates)) {}

  const std::vector<std::string> &candidates() const noexcept { return candidates_; }

 private:
  std::vector<std::string> candidates_;
};

/// Record data inconsistent with the dataset manifest or another input.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A correlation or ratio is undefined for the given inputs.
class NumericDomainError : public Error {
 public:
  using Error::Error;
};

/// Tool configuration file or job plan rejected.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace vexmatch
