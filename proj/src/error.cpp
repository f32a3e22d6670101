#include "ragner/error.hpp"

namespace ragner {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::DanglingInsideTag: return "DanglingInsideTag";
    case ErrorCode::DuplicateTypeName: return "DuplicateTypeName";
    case ErrorCode::EmptyDefinition: return "EmptyDefinition";
    case ErrorCode::UnknownSpanType: return "UnknownSpanType";
    case ErrorCode::StoreSizeTooLarge: return "StoreSizeTooLarge";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::AlignmentGap: return "AlignmentGap";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::MissingEntry: return "MissingEntry";
    case ErrorCode::EmptyCollection: return "EmptyCollection";
    case ErrorCode::NlistTooLarge: return "NlistTooLarge";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::EmptyQueryAfterStopwords: return "EmptyQueryAfterStopwords";
    case ErrorCode::EmptyStore: return "EmptyStore";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::SchemaTooSmall: return "SchemaTooSmall";
    case ErrorCode::NoDictionaryFound: return "NoDictionaryFound";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::MissingGold: return "MissingGold";
    case ErrorCode::SchemaMismatchAcrossRecords: return "SchemaMismatchAcrossRecords";
    case ErrorCode::EmptyRecords: return "EmptyRecords";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::StaleArtifact: return "StaleArtifact";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace ragner
