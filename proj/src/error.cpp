#include "kpstorm/error.hpp"

namespace kpstorm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedLine: return "MalformedLine";
    case ErrorKind::kNonMonotonicTime: return "NonMonotonicTime";
    case ErrorKind::kBadTimestamp: return "BadTimestamp";
    case ErrorKind::kValueOutOfRange: return "ValueOutOfRange";
    case ErrorKind::kCadenceMismatch: return "CadenceMismatch";
    case ErrorKind::kEmptyIntersection: return "EmptyIntersection";
    case ErrorKind::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::kEmptyDataset: return "EmptyDataset";
    case ErrorKind::kNonFiniteValue: return "NonFiniteValue";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kKOutOfRange: return "KOutOfRange";
    case ErrorKind::kDegenerateData: return "DegenerateData";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kEmptyTestSet: return "EmptyTestSet";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorKind kind, const std::string& message,
                     std::size_t line) {
  std::string out(to_string(kind));
  if (line > 0) out += "(line " + std::to_string(line) + ")";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::size_t line)
    : std::runtime_error(decorate(kind, message, line)),
      kind_(kind),
      message_(message),
      line_(line) {}

}  // namespace kpstorm
