#include "glosskit/error.hpp"

namespace glosskit {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DanglingHypernym: return "DanglingHypernym";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownSynset: return "UnknownSynset";
    case ErrorCode::SenseOrderConflict: return "SenseOrderConflict";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::IndexDataMismatch: return "IndexDataMismatch";
    case ErrorCode::EmptyClassSet: return "EmptyClassSet";
    case ErrorCode::MalformedMatrix: return "MalformedMatrix";
    case ErrorCode::EmptyLabel: return "EmptyLabel";
    case ErrorCode::UnresolvedClass: return "UnresolvedClass";
    case ErrorCode::UnknownOverride: return "UnknownOverride";
    case ErrorCode::MalformedExemplars: return "MalformedExemplars";
    case ErrorCode::SameClass: return "SameClass";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::QuotaExceeded: return "QuotaExceeded";
    case ErrorCode::ShortfallAfterRetries: return "ShortfallAfterRetries";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::UnknownGoldClass: return "UnknownGoldClass";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::MalformedEmbeddingFile: return "MalformedEmbeddingFile";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace glosskit
