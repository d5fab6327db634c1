// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <thread>

namespace samosa {

/// Host wall-clock time in nanoseconds since the Unix epoch. All run
/// timestamps (manifest, step log, collector events) share this timeline.
inline std::int64_t wall_clock_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

inline void sleep_ms(std::int64_t ms) {
    if (ms > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

/// Compact UTC stamp used in run ids: YYYYmmdd-HHMMSS.
std::string utc_stamp(std::int64_t ns_since_epoch);

/// Fresh identifier for one sandbox run: "run-<stamp>-<4 hex>".
std::string make_run_id();

} // namespace samosa
