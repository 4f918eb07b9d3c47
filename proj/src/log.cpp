#include "fradelay/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace fradelay::log {

Level level() {
    static Level lvl = [] {
        const char* e = std::getenv("FRADELAY_LOG");
        if (!e) return Level::error;
        if (std::strcmp(e, "debug") == 0) return Level::debug;
        if (std::strcmp(e, "info") == 0) return Level::info;
        return Level::error;
    }();
    return lvl;
}

static void emit(const char* tag, const std::string& msg) {
    std::fprintf(stderr, "[fradelay %s] %s\n", tag, msg.c_str());
}

void error(const std::string& msg) {
    emit("error", msg);
}

void info(const std::string& msg) {
    if (level() >= Level::info) emit("info", msg);
}

void debug(const std::string& msg) {
    if (level() >= Level::debug) emit("debug", msg);
}

}  // namespace fradelay::log
