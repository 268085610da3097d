#include "lilee/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

namespace lilee {

spdlog::logger &log() {
    static const std::shared_ptr<spdlog::logger> logger = [] {
        auto existing = spdlog::get("lilee");
        return existing ? existing : spdlog::stderr_color_mt("lilee");
    }();
    return *logger;
}

} // namespace lilee
