#include "fheprotect/error.hpp"

namespace fheprotect {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::CapacityExceeded: return "CapacityExceeded";
    case ErrorKind::KeyMismatch: return "KeyMismatch";
    case ErrorKind::DepthExceeded: return "DepthExceeded";
    case ErrorKind::InputTooShort: return "InputTooShort";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::InfeasibleParams: return "InfeasibleParams";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::ZeroPrefix: return "ZeroPrefix";
    case ErrorKind::UnknownParamsId: return "UnknownParamsId";
    case ErrorKind::EmptyGallery: return "EmptyGallery";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ZeroBaseline: return "ZeroBaseline";
    case ErrorKind::CorruptData: return "CorruptData";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void raise(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace fheprotect
