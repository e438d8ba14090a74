#include "forgenet/log.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <mutex>

namespace forgenet {

namespace {

LogLevel from_env() noexcept {
  const char* v = std::getenv("FORGENET_LOG");
  if (v == nullptr) return LogLevel::Warn;
  if (std::strcmp(v, "error") == 0) return LogLevel::Error;
  if (std::strcmp(v, "info") == 0) return LogLevel::Info;
  if (std::strcmp(v, "debug") == 0) return LogLevel::Debug;
  return LogLevel::Warn;
}

std::atomic<int>& threshold() {
  static std::atomic<int> level{static_cast<int>(from_env())};
  return level;
}

const char* tag(LogLevel level) {
  switch (level) {
    case LogLevel::Error: return "error";
    case LogLevel::Warn: return "warn";
    case LogLevel::Info: return "info";
    case LogLevel::Debug: return "debug";
  }
  return "?";
}

}  // namespace

LogLevel log_threshold() noexcept { return static_cast<LogLevel>(threshold().load()); }

void set_log_threshold(LogLevel level) noexcept { threshold().store(static_cast<int>(level)); }

void log_message(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > threshold().load()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[forgenet " << tag(level) << "] " << message << '\n';
}

}  // namespace forgenet
