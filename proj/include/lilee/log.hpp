#pragma once

#include <spdlog/spdlog.h>

namespace lilee {

/// Library-wide logger writing to stderr; stage outputs never go through it.
spdlog::logger &log();

} // namespace lilee
