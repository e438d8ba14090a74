#include "forgenet/error.hpp"

namespace forgenet {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Decode: return "decode error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Contract: return "contract error";
    case ErrorKind::DegenerateBatch: return "degenerate batch";
    case ErrorKind::PoisonedGradient: return "poisoned gradient";
  }
  return "unknown error";
}

}  // namespace forgenet
