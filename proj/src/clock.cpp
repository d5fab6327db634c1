// SPDX-License-Identifier: Apache-2.0
#include "samosa/clock.hpp"

#include <cstdio>
#include <ctime>
#include <random>

namespace samosa {

std::string utc_stamp(std::int64_t ns_since_epoch) {
    std::time_t secs = static_cast<std::time_t>(ns_since_epoch / 1000000000LL);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d%02d%02d-%02d%02d%02d",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                  tm.tm_min, tm.tm_sec);
    return buf;
}

std::string make_run_id() {
    static std::random_device rd;
    std::uniform_int_distribution<int> dist(0, 0xffff);
    char suffix[8];
    std::snprintf(suffix, sizeof(suffix), "%04x", dist(rd));
    return "run-" + utc_stamp(wall_clock_ns()) + "-" + suffix;
}

} // namespace samosa
