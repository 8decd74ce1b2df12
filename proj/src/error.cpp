#include "litsearch/error.hpp"

namespace litsearch {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::OffsetError: return "OffsetError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::UnsupportedDocument: return "UnsupportedDocument";
    case ErrorCode::LexiconError: return "LexiconError";
    case ErrorCode::RuleError: return "RuleError";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::DuplicatePmid: return "DuplicatePmid";
    case ErrorCode::BadKey: return "BadKey";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::BadPage: return "BadPage";
    case ErrorCode::UnknownRelationType: return "UnknownRelationType";
    case ErrorCode::BadLimit: return "BadLimit";
    case ErrorCode::TooManyIds: return "TooManyIds";
    case ErrorCode::BadFormat: return "BadFormat";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::EmptyBody: return "EmptyBody";
    case ErrorCode::SnapshotLoading: return "SnapshotLoading";
    case ErrorCode::LlmTransportError: return "LlmTransportError";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::ClaimParseError: return "ClaimParseError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace litsearch
