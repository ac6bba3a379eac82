#include "pdgplay/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace pdgplay {

void init_logging() {
  if (!spdlog::get("pdgplay")) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("pdgplay"));
  }
  spdlog::set_pattern("[%l] %v");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("PDGPLAY_LOG")) {
    const std::string v = env;
    if (v == "error") level = spdlog::level::err;
    else if (v == "warn") level = spdlog::level::warn;
    else if (v == "info") level = spdlog::level::info;
    else if (v == "debug") level = spdlog::level::debug;
    else spdlog::warn("ignoring PDGPLAY_LOG={} (expected error|warn|info|debug)", v);
  }
  spdlog::set_level(level);
}

}  // namespace pdgplay
