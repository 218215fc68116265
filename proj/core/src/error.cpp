#include "confcov/error.hpp"

namespace confcov {

std::string SourceLocation::to_string() const {
  if (!json_path.empty()) return "at " + json_path;
  return "row " + std::to_string(row) + ", column " + std::to_string(column);
}

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::kEmptyInput:
      return "empty input";
    case ParseErrorKind::kMalformedHeader:
      return "malformed header";
    case ParseErrorKind::kColumnCount:
      return "inconsistent column count";
    case ParseErrorKind::kInvalidId:
      return "invalid id";
    case ParseErrorKind::kInvalidLabel:
      return "invalid label";
    case ParseErrorKind::kNonNumeric:
      return "non-numeric cell";
    case ParseErrorKind::kProbabilityRange:
      return "probability out of range";
    case ParseErrorKind::kProbabilitySum:
      return "probability sum violation";
    case ParseErrorKind::kMalformedJson:
      return "malformed JSON";
    case ParseErrorKind::kSchema:
      return "schema violation";
  }
  return "parse error";
}

ParseError::ParseError(ParseErrorKind kind, SourceLocation where, const std::string& detail)
    : InputError(std::string(confcov::to_string(kind)) + " (" + where.to_string() + "): " + detail),
      kind_(kind),
      where_(std::move(where)),
      detail_(detail) {}

VersionError::VersionError(long long found_version)
    : InputError("unsupported format_version " + std::to_string(found_version) +
                 " (this build reads version 1)"),
      found_(found_version) {}

}  // namespace confcov
