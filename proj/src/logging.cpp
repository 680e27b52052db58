#include "sesn/logging.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace sesn {

void set_log_level(std::string_view level) {
  if (level == "error")
    spdlog::set_level(spdlog::level::err);
  else if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else if (level == "info" || level.empty())
    spdlog::set_level(spdlog::level::info);
  else {
    spdlog::set_level(spdlog::level::info);
    spdlog::warn("SESN_LOG='{}' not recognized; using info", std::string(level));
  }
}

void init_logging() {
  static bool installed = false;
  if (!installed) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("sesn"));
    spdlog::set_pattern("[%l] %v");
    installed = true;
  }
  const char* env = std::getenv("SESN_LOG");
  set_log_level(env ? env : "info");
}

}  // namespace sesn
