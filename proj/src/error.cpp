#include "goatrag/error.hpp"

namespace goatrag {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::RaggedTable: return "RaggedTable";
    case ErrorCode::NoHeaders: return "NoHeaders";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::ParserUnavailable: return "ParserUnavailable";
    case ErrorCode::MalformedTree: return "MalformedTree";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::UnknownValue: return "UnknownValue";
    case ErrorCode::ContradictoryEvidence: return "ContradictoryEvidence";
    case ErrorCode::PathTooDeep: return "PathTooDeep";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::QuotaExceeded: return "QuotaExceeded";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::InvalidTemplate: return "InvalidTemplate";
    case ErrorCode::OversizePrompt: return "OversizePrompt";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::EmptyChunk: return "EmptyChunk";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::LabelOnCorrect: return "LabelOnCorrect";
    case ErrorCode::MissingComponent: return "MissingComponent";
    case ErrorCode::IndexUnavailable: return "IndexUnavailable";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::SessionClosed: return "SessionClosed";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace goatrag
