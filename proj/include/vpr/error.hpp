#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vpr {

enum class ErrorCode {
  MissingFile,
  ParseError,
  DuplicateId,
  UnknownFrame,
  InvalidRecord,
  DimMismatch,
  CorruptHeader,
  ZeroVector,
  EmptyInput,
  NonPositiveP,
  UnsupportedImageType,
  ImageCodecError,
  InvalidTemplate,
  InvalidConfig,
  TransportError,
  ProtocolError,
  AuthError,
  EmptyScoreSet,
  NoValidSamples,
  EmptyCandidateList,
  UnknownId,
  FrameMismatch,
  MismatchedConfigs,
  StoreError,
  UsageError,
};

std::string_view to_string(ErrorCode code);

// Every failure the library reports is a vpr::Error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vpr
