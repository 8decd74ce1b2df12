#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace litsearch {

// Closed set of machine-readable failure codes. The HTTP layer maps each to a
// status; the CLI prints them on its structured error line.
enum class ErrorCode {
  SyntaxError,
  OffsetError,
  SchemaError,
  UnsupportedDocument,
  LexiconError,
  RuleError,
  NotFound,
  DuplicatePmid,
  BadKey,
  IoError,
  VersionMismatch,
  ChecksumMismatch,
  ParseError,
  EmptyQuery,
  BadPage,
  UnknownRelationType,
  BadLimit,
  TooManyIds,
  BadFormat,
  TooLarge,
  EmptyBody,
  SnapshotLoading,
  LlmTransportError,
  BudgetExhausted,
  ProtocolError,
  ClaimParseError,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Query-language failure with a 0-based character position into the input.
class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& message)
      : Error(ErrorCode::ParseError, message + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace litsearch
