#include "mpq/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace mpq::log {

namespace {

Level parse_env() {
  const char* v = std::getenv("MPQ_LOG");
  if (!v) return Level::warn;
  if (std::strcmp(v, "debug") == 0) return Level::debug;
  if (std::strcmp(v, "info") == 0) return Level::info;
  if (std::strcmp(v, "warn") == 0) return Level::warn;
  if (std::strcmp(v, "error") == 0) return Level::error;
  if (std::strcmp(v, "off") == 0) return Level::off;
  return Level::warn;
}

const char* tag(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
    default: return "?";
  }
}

}  // namespace

Level threshold() {
  static const Level t = parse_env();
  return t;
}

bool enabled(Level level) { return level >= threshold() && level != Level::off; }

void write(Level level, const std::string& message) {
  if (!enabled(level)) return;
  std::fprintf(stderr, "[mpq %s] %s\n", tag(level), message.c_str());
}

}  // namespace mpq::log
