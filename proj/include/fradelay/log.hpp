#pragma once

#include <string>

namespace fradelay::log {

enum class Level { error = 0, info = 1, debug = 2 };

// Level comes from FRADELAY_LOG (error|info|debug), default error.
Level level();

void error(const std::string& msg);
void info(const std::string& msg);
void debug(const std::string& msg);

}  // namespace fradelay::log
