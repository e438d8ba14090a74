#pragma once

#include <stdexcept>
#include <string>

namespace forgenet {

enum class ErrorKind {
  Shape,
  Config,
  Format,
  Parse,
  Decode,
  Io,
  Contract,
  DegenerateBatch,
  PoisonedGradient,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the core carries a kind so the C boundary can map
// it onto a status code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace forgenet
