#include "streamlda/util.hpp"

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace streamlda {

static LogLevel parse_level(const char* s) {
  if (s == nullptr || *s == '\0') return LogLevel::warn;
  if (std::strcmp(s, "quiet") == 0 || std::strcmp(s, "0") == 0) return LogLevel::quiet;
  if (std::strcmp(s, "warn") == 0 || std::strcmp(s, "1") == 0) return LogLevel::warn;
  if (std::strcmp(s, "info") == 0 || std::strcmp(s, "2") == 0) return LogLevel::info;
  if (std::strcmp(s, "debug") == 0 || std::strcmp(s, "3") == 0) return LogLevel::debug;
  return LogLevel::warn;
}

LogLevel log_level() {
  static LogLevel level = parse_level(std::getenv("STREAMLDA_LOG"));
  return level;
}

static void vlog(const char* tag, const char* fmt, va_list ap) {
  std::fprintf(stderr, "[%s] ", tag);
  std::vfprintf(stderr, fmt, ap);
  std::fputc('\n', stderr);
}

void log_warn(const char* fmt, ...) {
  if (log_level() < LogLevel::warn) return;
  va_list ap;
  va_start(ap, fmt);
  vlog("warn", fmt, ap);
  va_end(ap);
}

void log_info(const char* fmt, ...) {
  if (log_level() < LogLevel::info) return;
  va_list ap;
  va_start(ap, fmt);
  vlog("info", fmt, ap);
  va_end(ap);
}

void log_debug(const char* fmt, ...) {
  if (log_level() < LogLevel::debug) return;
  va_list ap;
  va_start(ap, fmt);
  vlog("debug", fmt, ap);
  va_end(ap);
}

namespace memgauge {

std::atomic<int64_t>& bytes() {
  static std::atomic<int64_t> gauge{0};
  return gauge;
}

}  // namespace memgauge

}  // namespace streamlda
