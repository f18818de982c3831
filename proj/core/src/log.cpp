#include "catembed/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace catembed::logging {

namespace {

Level g_level = [] {
    const char* env = std::getenv("CATEMBED_LOG");
    if (!env) return Level::Error;
    const std::string v(env);
    if (v == "debug") return Level::Debug;
    if (v == "info") return Level::Info;
    return Level::Error;
}();

std::mutex g_mutex;

void emit(const char* tag, const std::string& msg) {
    std::lock_guard<std::mutex> lock(g_mutex);
    std::cerr << tag << msg << '\n';
}

}  // namespace

Level level() { return g_level; }
void set_level(Level lv) { g_level = lv; }

void error(const std::string& msg) { emit("error: ", msg); }

void warn(const std::string& msg) { emit("warning: ", msg); }

void info(const std::string& msg) {
    if (g_level >= Level::Info) emit("info: ", msg);
}

void debug(const std::string& msg) {
    if (g_level >= Level::Debug) emit("debug: ", msg);
}

}  // namespace catembed::logging
