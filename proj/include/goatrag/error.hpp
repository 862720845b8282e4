#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace goatrag {

// Machine-readable failure classes. The string form (to_string) is what the
// HTTP service and CLI emit in error bodies and diagnostics.
enum class ErrorCode {
  EmptyDocument,
  DuplicateId,
  DanglingReference,
  RaggedTable,
  NoHeaders,
  EmptyTable,
  ParserUnavailable,
  MalformedTree,
  UnknownAttribute,
  UnknownValue,
  ContradictoryEvidence,
  PathTooDeep,
  EmptyCorpus,
  EmptyQuery,
  DimensionMismatch,
  ProviderUnavailable,
  QuotaExceeded,
  FormatError,
  VersionMismatch,
  InvalidTemplate,
  OversizePrompt,
  BackendUnavailable,
  Timeout,
  EmptyChunk,
  EmptySequence,
  LabelOnCorrect,
  MissingComponent,
  IndexUnavailable,
  UnknownSession,
  SessionClosed,
  InvalidConfig,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace goatrag
