// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <sys/types.h>

namespace samosa::proc {

struct ExecResult {
    int exit_code = -1;
    std::string out;
    std::string err;
    bool timed_out = false;
    std::int64_t started_ns = 0;
    std::int64_t ended_ns = 0;
};

/// Run argv to completion capturing stdout/stderr. The child gets its own
/// process group; on timeout the whole group is killed and timed_out is set.
/// timeout_s <= 0 means no timeout.
ExecResult run_command(const std::vector<std::string>& argv, int timeout_s);

/// Same as run_command but through `/bin/sh -c`.
ExecResult run_shell(const std::string& command_line, int timeout_s);

/// A long-lived child (emulator, tcpdump, perf). stdout/stderr can be
/// redirected to files. The child is its own process group leader so
/// terminate() can take helpers down with it.
class Child {
public:
    Child() = default;
    Child(const Child&) = delete;
    Child& operator=(const Child&) = delete;
    Child(Child&& other) noexcept;
    Child& operator=(Child&& other) noexcept;
    ~Child();

    static Child spawn(const std::vector<std::string>& argv,
                       const std::optional<std::filesystem::path>& stdout_path,
                       const std::optional<std::filesystem::path>& stderr_path);

    pid_t pid() const { return pid_; }
    bool running();
    void signal(int signo);
    /// Signal `signo`, wait up to wait_ms for exit, then SIGKILL the group.
    void terminate(int signo, int wait_ms);
    /// Reap if exited; returns exit code when available.
    std::optional<int> try_wait();

private:
    pid_t pid_ = -1;
    bool reaped_ = false;
    int exit_code_ = -1;
};

} // namespace samosa::proc
