#include "nkdc/error.hpp"

namespace nkdc {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::BoundExceeded: return "BoundExceeded";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::Oversize: return "Oversize";
    case ErrorCode::MalformedPayload: return "MalformedPayload";
    case ErrorCode::ConnectionLost: return "ConnectionLost";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::Timeout: return "Timeout";
  }
  return "Unknown";
}

}  // namespace nkdc
