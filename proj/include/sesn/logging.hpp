#pragma once

#include <string_view>

namespace sesn {

/// Sets the global log level from SESN_LOG (error, info or debug; default info).
/// Unknown values fall back to info with a warning.
void init_logging();
void set_log_level(std::string_view level);

}  // namespace sesn
