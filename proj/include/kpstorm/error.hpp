#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kpstorm {

enum class ErrorKind {
  kMalformedLine,
  kNonMonotonicTime,
  kBadTimestamp,
  kValueOutOfRange,
  kCadenceMismatch,
  kEmptyIntersection,
  kIndexOutOfRange,
  kEmptyDataset,
  kNonFiniteValue,
  kDimensionMismatch,
  kKOutOfRange,
  kDegenerateData,
  kEmptyInput,
  kLengthMismatch,
  kEmptyTestSet,
  kInvalidArgument,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Data or precondition failure raised by every pipeline stage.
/// `line()` is the 1-based input line for parser errors, 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::size_t line = 0);

  ErrorKind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }
  /// The message without the kind/line prefix carried by what().
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
  std::size_t line_;
};

}  // namespace kpstorm
