#pragma once

#include <string>

namespace catembed::logging {

enum class Level { Error = 0, Info = 1, Debug = 2 };

/// Current level, read once from the CATEMBED_LOG environment variable
/// ("error", "info" or "debug"; default "error").
Level level();

void set_level(Level lv);

void error(const std::string& msg);
void info(const std::string& msg);
void debug(const std::string& msg);

/// Warnings ride the error channel so contract-mandated warnings (unseen
/// categories, zero-norm vectors) are visible at the default level.
void warn(const std::string& msg);

}  // namespace catembed::logging
