#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fheprotect {

enum class ErrorKind {
  InvalidArgument,
  CapacityExceeded,
  KeyMismatch,
  DepthExceeded,
  InputTooShort,
  InvalidParams,
  InfeasibleParams,
  IllConditioned,
  ZeroVector,
  DomainViolation,
  ZeroPrefix,
  UnknownParamsId,
  EmptyGallery,
  DegenerateLabels,
  DimensionMismatch,
  ZeroBaseline,
  CorruptData,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind whose name is what the
/// CLI prints, e.g. "DepthExceeded: mult would reach depth 17 (budget 16)".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& what);

}  // namespace fheprotect
