#pragma once

// Exception hierarchy shared by every confcov module.
//
//   Error
//   +-- InputError        precondition / validation failure on caller data
//   |   +-- ParseError    malformed bytes; carries a row/column or JSON path
//   |   +-- VersionError  well-formed document with an unsupported format_version
//   +-- ConfigError       unknown identifier (e.g. score function name)
//   +-- ExecutionError    resource limit hit while running; carries progress

#include <cstddef>
#include <stdexcept>
#include <string>

namespace confcov {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Where in an input a parse failure was detected. Text tables use 1-based
// row (line) and column (field) numbers; JSON documents use a JSON pointer.
struct SourceLocation {
  std::size_t row = 0;
  std::size_t column = 0;
  std::string json_path;

  std::string to_string() const;
};

enum class ParseErrorKind {
  kEmptyInput,
  kMalformedHeader,
  kColumnCount,
  kInvalidId,
  kInvalidLabel,
  kNonNumeric,
  kProbabilityRange,
  kProbabilitySum,
  kMalformedJson,
  kSchema,
};

const char* to_string(ParseErrorKind kind);

class ParseError : public InputError {
 public:
  ParseError(ParseErrorKind kind, SourceLocation where, const std::string& detail);

  ParseErrorKind kind() const noexcept { return kind_; }
  const SourceLocation& where() const noexcept { return where_; }
  // The message without the kind and location prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ParseErrorKind kind_;
  SourceLocation where_;
  std::string detail_;
};

class VersionError : public InputError {
 public:
  explicit VersionError(long long found_version);

  long long found_version() const noexcept { return found_; }

 private:
  long long found_;
};

class ExecutionError : public Error {
 public:
  ExecutionError(const std::string& what, std::size_t completed, std::size_t total)
      : Error(what + " (completed " + std::to_string(completed) + " of " +
              std::to_string(total) + ")"),
        completed_(completed),
        total_(total) {}

  std::size_t completed() const noexcept { return completed_; }
  std::size_t total() const noexcept { return total_; }

 private:
  std::size_t completed_;
  std::size_t total_;
};

}  // namespace confcov
