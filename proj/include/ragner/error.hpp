#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ragner {

enum class ErrorCode {
  // corpus
  MalformedLine,
  DanglingInsideTag,
  DuplicateTypeName,
  EmptyDefinition,
  UnknownSpanType,
  StoreSizeTooLarge,
  // embedder
  DimensionMismatch,
  ProviderUnavailable,
  AlignmentGap,
  EmptyInput,
  FormatError,
  MissingEntry,
  // vector index
  EmptyCollection,
  NlistTooLarge,
  IoError,
  VersionMismatch,
  // retriever
  EmptyQueryAfterStopwords,
  EmptyStore,
  // promptkit / augment
  SchemaMismatch,
  SchemaTooSmall,
  NoDictionaryFound,
  // generation
  Timeout,
  HttpError,
  MissingGold,
  // evaluation
  SchemaMismatchAcrossRecords,
  EmptyRecords,
  // shared / cli
  InvalidArgument,
  ConfigError,
  MissingArtifact,
  StaleArtifact,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a stable machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ragner
