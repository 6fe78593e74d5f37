#pragma once

#include <cstdarg>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace beam {

/// Bad user input or contract violation detected before work starts.
/// The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Failure during execution (I/O error, numeric blow-up, ...).
/// The CLI maps this to exit code 2.
class RuntimeError : public std::runtime_error {
 public:
  explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };

inline LogLevel& log_level() {
  static LogLevel level = LogLevel::Info;
  return level;
}

inline void log_line(LogLevel lvl, const char* fmt, ...) {
  if (lvl < log_level()) return;
  static const char* names[] = {"debug", "info", "warn", "error"};
  std::fprintf(stderr, "[%s] ", names[static_cast<int>(lvl)]);
  va_list ap;
  va_start(ap, fmt);
  std::vfprintf(stderr, fmt, ap);
  va_end(ap);
  std::fputc('\n', stderr);
}

#define BEAM_LOG_DEBUG(...) ::beam::log_line(::beam::LogLevel::Debug, __VA_ARGS__)
#define BEAM_LOG_INFO(...) ::beam::log_line(::beam::LogLevel::Info, __VA_ARGS__)
#define BEAM_LOG_WARN(...) ::beam::log_line(::beam::LogLevel::Warn, __VA_ARGS__)

}  // namespace beam
