#include "vpr/error.hpp"

namespace vpr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownFrame: return "UnknownFrame";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonPositiveP: return "NonPositiveP";
    case ErrorCode::UnsupportedImageType: return "UnsupportedImageType";
    case ErrorCode::ImageCodecError: return "ImageCodecError";
    case ErrorCode::InvalidTemplate: return "InvalidTemplate";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::EmptyScoreSet: return "EmptyScoreSet";
    case ErrorCode::NoValidSamples: return "NoValidSamples";
    case ErrorCode::EmptyCandidateList: return "EmptyCandidateList";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::MismatchedConfigs: return "MismatchedConfigs";
    case ErrorCode::StoreError: return "StoreError";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

}  // namespace vpr
