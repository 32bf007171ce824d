#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace glosskit {

enum class ErrorCode {
  // skb-core
  MalformedRecord,
  DanglingHypernym,
  CycleDetected,
  DuplicateId,
  UnknownSynset,
  SenseOrderConflict,
  // wordnet import
  MalformedLine,
  IndexDataMismatch,
  // similarity
  EmptyClassSet,
  MalformedMatrix,
  // class mapping
  EmptyLabel,
  UnresolvedClass,
  UnknownOverride,
  // prompting and generation
  MalformedExemplars,
  SameClass,
  BackendUnavailable,
  QuotaExceeded,
  ShortfallAfterRetries,
  IndexOutOfRange,
  MissingClass,
  // evaluation
  EmptyEnsemble,
  ZeroVector,
  DimensionMismatch,
  NonFiniteValue,
  UnknownGoldClass,
  UnknownClass,
  MissingEmbedding,
  ProviderUnavailable,
  MalformedEmbeddingFile,
  // general
  InvalidArgument,
  InvalidConfig,
  Io,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Single exception type for the library; `code()` is the machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace glosskit
