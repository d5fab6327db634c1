// SPDX-License-Identifier: Apache-2.0
#include "samosa/pipeline.hpp"

#include "samosa/clock.hpp"
#include "samosa/errors.hpp"
#include "samosa/subprocess.hpp"

namespace samosa::pipeline {

void CommandRecorder::script_exit(const std::string& pattern, int exit_code) {
    scripted_.emplace_back(pattern, exit_code);
}

int CommandRecorder::lookup_exit(const std::string& command) const {
    for (const auto& [pattern, code] : scripted_)
        if (!pattern.empty() && command.find(pattern) != std::string::npos)
            return code;
    return 0;
}

void CommandRecorder::record(const std::string& command, int exit_code) {
    log_.push_back({command, exit_code});
}

HookResult execute_host_command(const std::string& command, std::uint32_t timeout_s,
                                CommandRecorder* recorder) {
    HookResult res;
    res.spec.locus = config::HookLocus::HOST;
    res.spec.command = command;
    res.spec.timeout_s = timeout_s;

    if (recorder) {
        res.exit_code = recorder->lookup_exit(command);
        recorder->record(command, res.exit_code);
        res.duration_ms = 0;
        return res;
    }

    auto exec = proc::run_shell(command, static_cast<int>(timeout_s));
    if (exec.timed_out)
        throw ExecTimeout("host command exceeded " + std::to_string(timeout_s) +
                          "s: " + command);
    res.exit_code = exec.exit_code;
    res.stdout_bytes = exec.out;
    res.stderr_bytes = exec.err;
    res.duration_ms = (exec.ended_ns - exec.started_ns) / 1000000;
    return res;
}

} // namespace samosa::pipeline
