#pragma once

#include <stdexcept>
#include <string>

namespace veriphy {

enum class ErrorKind {
  InvalidArgument,
  AttemptsExhausted,
  SamplingFailed,
  ScheduleTooDense,
  StreamTooShort,
  WindowTooShort,
  ShapeMismatch,
  EmptyDataset,
  Io,
  Format,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so the CLI can map it
/// onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace veriphy
