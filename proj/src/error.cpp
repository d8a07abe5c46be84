#include "veriphy/error.hpp"

namespace veriphy {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::AttemptsExhausted: return "AttemptsExhausted";
    case ErrorKind::SamplingFailed: return "SamplingFailed";
    case ErrorKind::ScheduleTooDense: return "ScheduleTooDense";
    case ErrorKind::StreamTooShort: return "StreamTooShort";
    case ErrorKind::WindowTooShort: return "WindowTooShort";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Format: return "Format";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace veriphy
