// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "samosa/config.hpp"
#include "samosa/errors.hpp"
#include "samosa/scenario.hpp"
#include "samosa/vmdriver.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace samosa::pipeline {

/// The canonical execution order. A run's step log is always a prefix of
/// this sequence; failures truncate it.
enum class PipelineStep {
    PRE_SETUP_HOOKS,
    CLONE_SNAPSHOT,
    BOOT_VM,
    ENABLE_DISK_TRACE,
    COPY_BINARY,
    PRE_RUN_HOOKS,
    START_NETEMU,
    START_HPC,
    START_SYSDIG,
    EXECUTE_BINARY,
    WAIT_DURATION,
    HALT_EXECUTION,
    STOP_COLLECTORS,
    POST_RUN_HOOKS,
    COPY_OUT,
    SHUTDOWN_VM,
    POST_SHUTDOWN_HOOKS,
};

const std::vector<PipelineStep>& canonical_step_order();
std::string to_string(PipelineStep step);
PipelineStep pipeline_step_from_string(const std::string& s);

struct StepRecord {
    PipelineStep step;
    std::int64_t ts_ns = 0;
    std::string outcome; // "ok" or "failed"
};

struct HookResult {
    config::HookSpec spec;
    int exit_code = -1;
    std::string stdout_bytes;
    std::string stderr_bytes;
    std::int64_t duration_ms = 0;
};

/// Machine-readable record of one run (written to run.json).
struct RunManifest {
    std::string run_id;
    std::string binary_name;
    std::vector<std::string> args;
    std::vector<std::string> boot_command;
    std::int64_t t_boot = 0;
    std::int64_t t_exec_start = 0;
    std::int64_t t_exec_halt = 0;
    std::int64_t t_shutdown = 0;
    std::vector<HookResult> hooks_executed;
    config::NetworkMode network_mode = config::NetworkMode::EMULATED;
    std::int64_t guest_clock_offset_ns = 0;
    std::map<std::string, std::string> artifacts; // name -> relative path
    std::vector<StepRecord> step_log;

    // Applied-configuration snapshot so `analyze` is self-contained.
    struct AppliedConfig {
        std::string guest_ip;
        config::DiskDevice disk_device = config::DiskDevice::NVME;
        std::uint32_t net_window_ms = 1;
        std::uint32_t hpc_interval_ms = 100;
        std::vector<std::string> hpc_events;
        std::uint32_t exec_duration_s = 0;
        std::int64_t clock_offset_uncertainty_ns = 0;
    } applied;

    std::optional<std::int64_t> step_ts(PipelineStep step) const;
};

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);
void write_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest load_manifest(const std::filesystem::path& path);

/// Captures host commands instead of executing them; scripted exit codes
/// keyed by substring pattern. Used for NAT plans and HOST hooks under test,
/// and by default for mock-backend runs.
class CommandRecorder {
public:
    struct Recorded {
        std::string command;
        int exit_code;
    };

    void script_exit(const std::string& pattern, int exit_code);
    int lookup_exit(const std::string& command) const;
    void record(const std::string& command, int exit_code);
    const std::vector<Recorded>& log() const { return log_; }

private:
    std::vector<std::pair<std::string, int>> scripted_;
    std::vector<Recorded> log_;
};

/// Single chokepoint for anything the toolkit runs on the host. With a
/// recorder set, the command is logged and the scripted result returned;
/// otherwise it executes via /bin/sh. Throws ExecTimeout (child killed).
HookResult execute_host_command(const std::string& command, std::uint32_t timeout_s,
                                CommandRecorder* recorder);

/// Failure raised by run_pipeline: the failing step plus the step log so
/// far (cleanup has already run by the time this is thrown).
class PipelineError : public Error {
public:
    PipelineError(PipelineStep failed_step, std::vector<StepRecord> log,
                  const std::string& msg)
        : Error(msg), failed_step_(failed_step), step_log_(std::move(log)) {}
    PipelineStep failed_step() const { return failed_step_; }
    const std::vector<StepRecord>& step_log() const { return step_log_; }

private:
    PipelineStep failed_step_;
    std::vector<StepRecord> step_log_;
};

struct RunOptions {
    std::optional<std::filesystem::path> output_dir_override;
    /// Host commands are recorded (not executed) through this recorder.
    /// Mock runs get an internal recorder automatically when unset.
    CommandRecorder* recorder = nullptr;
    /// Test hook: make the named step fail after its work completed.
    std::optional<PipelineStep> inject_failure_at;
    std::string run_id; // empty = generate
};

struct RunResult {
    RunManifest manifest;
    std::filesystem::path run_dir;
};

/// Execute the full pipeline for one run. Steps run exactly in canonical
/// order; on any failure cleanup (halt jobs, stop collectors, teardown NAT,
/// shutdown VM) runs before PipelineError is thrown.
RunResult run_pipeline(const config::RunConfig& cfg, vm::BackendKind backend,
                       const std::optional<vm::ScenarioScript>& scenario = std::nullopt,
                       const RunOptions& options = {});

/// Run the hooks declared for one stage, sequentially in declaration order,
/// appending every result to `executed` (so partial results survive).
/// PRE_SETUP / PRE_RUN failures abort the run (HookFailed); POST_RUN /
/// POST_SHUTDOWN failures are recorded and execution continues.
void execute_hooks(config::HookStage stage, const config::RunConfig& cfg,
                   vm::Driver* driver, vm::VmHandle* handle, CommandRecorder* recorder,
                   std::vector<HookResult>& executed);

// Artifact names of the run-directory layout (normative).
const std::vector<std::string>& core_artifact_names();    // always expected
const std::vector<std::string>& netemu_artifact_names();  // emulated mode only

} // namespace samosa::pipeline
