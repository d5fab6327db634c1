// SPDX-License-Identifier: Apache-2.0
#include "samosa/pipeline.hpp"

#include "samosa/clock.hpp"
#include "samosa/collectors.hpp"
#include "samosa/errors.hpp"
#include "samosa/netemu.hpp"

#include <fstream>
#include <sstream>

namespace samosa::pipeline {

namespace {

constexpr const char* kBridgeName = "samosa-br0";
constexpr const char* kTapName = "samosa-tap0";
constexpr int kBootTimeoutS = 300;
constexpr int kShutdownGraceS = 30;

// Raised by the fault-injection hook; behaves like any other step failure.
class InjectedFault : public Error {
public:
    using Error::Error;
};

std::string subnet_of(const std::string& guest_ip) {
    size_t last_dot = guest_ip.rfind('.');
    return guest_ip.substr(0, last_dot) + ".0/24";
}

std::string gateway_of(const std::string& guest_ip) {
    size_t last_dot = guest_ip.rfind('.');
    return guest_ip.substr(0, last_dot) + ".1";
}

HookResult run_guest_hook(vm::Driver& driver, vm::VmHandle& handle,
                          const config::HookSpec& spec) {
    HookResult res;
    res.spec = spec;
    try {
        auto exec = driver.exec_guest(handle, spec.command,
                                      static_cast<int>(spec.timeout_s));
        res.exit_code = exec.exit_code;
        res.stdout_bytes = exec.stdout_bytes;
        res.stderr_bytes = exec.stderr_bytes;
        res.duration_ms = (exec.ended_ts_ns - exec.started_ts_ns) / 1000000;
    } catch (const ExecTimeout& e) {
        res.exit_code = 124;
        res.stderr_bytes = e.what();
        res.duration_ms = static_cast<std::int64_t>(spec.timeout_s) * 1000;
    }
    return res;
}

// Orchestration state for one run; cleanup() is idempotent and total.
struct RunState {
    RunState(const config::RunConfig& c, vm::Driver& d, CommandRecorder* r,
             std::filesystem::path dir)
        : cfg(c), driver(d), recorder(r), run_dir(std::move(dir)) {}

    const config::RunConfig& cfg;
    vm::Driver& driver;
    CommandRecorder* recorder;
    std::filesystem::path run_dir;

    RunManifest manifest;
    std::optional<vm::VmHandle> handle;
    bool vm_down = true; // flips at boot, back at shutdown
    vm::BootCommand boot_cmd;

    netemu::EmulatorHandle emulator;
    bool netemu_report_written = false;
    std::optional<netemu::NatPlan> nat_plan;
    bool nat_active = false;

    collectors::SyscallCapture syscap;
    std::optional<collectors::HostCapture> hpc_capture;
    std::optional<collectors::HostCapture> pcap_capture;

    std::optional<vm::GuestJobId> binary_job;
    std::string guest_binary_path;
    std::string guest_stdout_path;
    std::string guest_stderr_path;

    void cleanup() {
        if (handle && binary_job) {
            try {
                if (driver.guest_job_running(*handle, *binary_job))
                    driver.halt_job(*handle, *binary_job);
            } catch (const Error&) {
            }
            binary_job.reset();
        }
        if (handle && syscap.started() && !syscap.stopped()) {
            try {
                syscap.stop(driver, *handle);
            } catch (const Error&) {
            }
        }
        if (hpc_capture) {
            try {
                collectors::stop_host_capture(driver, *hpc_capture);
            } catch (const Error&) {
            }
            hpc_capture.reset();
        }
        if (pcap_capture) {
            try {
                collectors::stop_host_capture(driver, *pcap_capture);
            } catch (const Error&) {
            }
            pcap_capture.reset();
        }
        if (emulator) {
            emulator->stop();
            if (!netemu_report_written) {
                try {
                    netemu::write_report(*emulator, run_dir);
                    netemu_report_written = true;
                } catch (const Error&) {
                }
            }
        }
        if (nat_active && nat_plan) {
            for (const auto& cmd : nat_plan->teardown_cmds) {
                try {
                    execute_host_command(cmd, 30, recorder);
                } catch (const Error&) {
                }
            }
            nat_active = false;
        }
        if (handle && !vm_down) {
            try {
                driver.shutdown(*handle, 10);
            } catch (const Error&) {
            }
            vm_down = true;
        }
    }
};

} // namespace

void execute_hooks(config::HookStage stage, const config::RunConfig& cfg,
                   vm::Driver* driver, vm::VmHandle* handle, CommandRecorder* recorder,
                   std::vector<HookResult>& executed) {
    const bool abort_on_failure =
        stage == config::HookStage::PRE_SETUP || stage == config::HookStage::PRE_RUN;

    for (const auto& spec : cfg.hooks) {
        if (spec.stage != stage)
            continue;

        HookResult res;
        if (spec.locus == config::HookLocus::HOST) {
            try {
                res = execute_host_command(spec.command, spec.timeout_s, recorder);
                res.spec = spec;
            } catch (const ExecTimeout& e) {
                res.spec = spec;
                res.exit_code = 124;
                res.stderr_bytes = e.what();
            }
        } else {
            if (!driver || !handle)
                throw HookFailed("guest hook at stage " + config::to_string(stage) +
                                 " requires a booted VM");
            res = run_guest_hook(*driver, *handle, spec);
        }
        executed.push_back(res);

        if (res.exit_code != 0 && abort_on_failure)
            throw HookFailed("hook '" + spec.command + "' at stage " +
                             config::to_string(stage) + " exited with code " +
                             std::to_string(res.exit_code));
    }
}

RunResult run_pipeline(const config::RunConfig& cfg, vm::BackendKind backend,
                       const std::optional<vm::ScenarioScript>& scenario,
                       const RunOptions& options) {
    auto violations = config::validate_config(cfg);
    if (!violations.empty()) {
        std::ostringstream msg;
        msg << "configuration is invalid:";
        for (const auto& v : violations)
            msg << " [" << v.field << ": " << v.rule << "]";
        throw SchemaError(msg.str());
    }

    const std::string run_id = options.run_id.empty() ? make_run_id() : options.run_id;
    const std::filesystem::path output_dir =
        options.output_dir_override.value_or(cfg.output_dir);
    const std::filesystem::path run_dir = output_dir / run_id;
    std::error_code ec;
    std::filesystem::create_directories(run_dir, ec);
    if (ec)
        throw IoError("cannot create run directory " + run_dir.string() + ": " +
                      ec.message());

    // Mock runs must not touch the host; record commands unless the caller
    // supplied their own recorder.
    CommandRecorder internal_recorder;
    CommandRecorder* recorder = options.recorder;
    if (!recorder && backend == vm::BackendKind::MOCK)
        recorder = &internal_recorder;

    std::unique_ptr<vm::Driver> driver;
    if (backend == vm::BackendKind::MOCK)
        driver = vm::make_mock_driver(scenario ? *scenario : vm::make_default_scenario());
    else
        driver = vm::make_qemu_driver(run_dir);

    RunState st(cfg, *driver, recorder, run_dir);
    st.manifest.run_id = run_id;
    st.manifest.binary_name = cfg.binary_path.filename().string();
    st.manifest.args = cfg.args;
    st.manifest.network_mode = cfg.network_mode;
    st.manifest.applied.guest_ip = cfg.profile.guest_ip;
    st.manifest.applied.disk_device = cfg.profile.disk_device;
    st.manifest.applied.net_window_ms = cfg.net_window_ms;
    st.manifest.applied.hpc_interval_ms = cfg.hpc_interval_ms;
    st.manifest.applied.hpc_events = cfg.hpc_events;
    st.manifest.applied.exec_duration_s = cfg.exec_duration_s;

    const bool mock = backend == vm::BackendKind::MOCK;
    const std::string bind_ip = mock ? "127.0.0.1" : gateway_of(cfg.profile.guest_ip);

    auto run_step = [&](PipelineStep step, auto&& work) {
        try {
            work();
            if (options.inject_failure_at && *options.inject_failure_at == step)
                throw InjectedFault("injected fault at step " + to_string(step));
            st.manifest.step_log.push_back({step, wall_clock_ns(), "ok"});
        } catch (const std::exception& e) {
            st.manifest.step_log.push_back({step, wall_clock_ns(), "failed"});
            st.cleanup();
            try {
                write_manifest(st.manifest, run_dir / "run.json");
            } catch (const Error&) {
            }
            throw PipelineError(step, st.manifest.step_log,
                                "step " + to_string(step) + " failed: " + e.what());
        }
    };

    run_step(PipelineStep::PRE_SETUP_HOOKS, [&] {
        execute_hooks(config::HookStage::PRE_SETUP, cfg, nullptr, nullptr, recorder,
                      st.manifest.hooks_executed);
    });

    run_step(PipelineStep::CLONE_SNAPSHOT, [&] {
        auto snapshot = vm::clone_snapshot(cfg.profile, run_dir);
        st.manifest.artifacts["snapshot.img"] =
            std::filesystem::relative(snapshot, run_dir).string();
    });

    run_step(PipelineStep::BOOT_VM, [&] {
        st.boot_cmd = vm::build_boot_command(cfg.profile, run_id,
                                             run_dir / "snapshot.img", kTapName);
        st.manifest.boot_command = st.boot_cmd.tokens;
        st.handle = st.driver.boot(st.boot_cmd, cfg.profile, kBootTimeoutS);
        st.vm_down = false;
        st.manifest.t_boot = st.handle->boot_ts_ns;
    });

    run_step(PipelineStep::ENABLE_DISK_TRACE, [&] {
        // Tracing was enabled through the boot command; make sure the
        // output stream exists before execution starts.
        if (!std::filesystem::exists(st.boot_cmd.trace_output))
            std::ofstream(st.boot_cmd.trace_output).flush();
        st.manifest.artifacts["disk.trace"] = "disk.trace";
        st.manifest.artifacts["vm.log"] = "vm.log";
    });

    run_step(PipelineStep::COPY_BINARY, [&] {
        st.guest_binary_path = "/root/" + st.manifest.binary_name;
        st.driver.copy_in(*st.handle, cfg.binary_path, st.guest_binary_path, true);
    });

    run_step(PipelineStep::PRE_RUN_HOOKS, [&] {
        execute_hooks(config::HookStage::PRE_RUN, cfg, &st.driver, &*st.handle, recorder,
                      st.manifest.hooks_executed);
    });

    run_step(PipelineStep::START_NETEMU, [&] {
        st.pcap_capture = collectors::start_pcap(st.driver, kTapName,
                                                 run_dir / "capture.pcap");
        st.manifest.artifacts["capture.pcap"] = "capture.pcap";

        if (cfg.network_mode == config::NetworkMode::EMULATED) {
            st.emulator = netemu::start_emulator(
                netemu::default_listeners(bind_ip, /*ephemeral_ports=*/mock), bind_ip);
        } else {
            st.nat_plan = netemu::plan_nat(kBridgeName, subnet_of(cfg.profile.guest_ip));
            for (const auto& cmd : st.nat_plan->setup_cmds) {
                auto res = execute_host_command(cmd, 30, recorder);
                if (res.exit_code != 0)
                    throw Error("NAT setup command failed (" + cmd + "): exit " +
                                std::to_string(res.exit_code));
            }
            st.nat_active = true;
        }
    });

    run_step(PipelineStep::START_HPC, [&] {
        st.hpc_capture = collectors::start_hpc(
            st.driver, st.handle->emulator_pid.value_or(0), cfg.hpc_events,
            cfg.hpc_interval_ms, run_dir / "hpc.csv");
        st.manifest.artifacts["hpc.csv"] = "hpc.csv";
    });

    run_step(PipelineStep::START_SYSDIG, [&] {
        st.syscap.start(st.driver, *st.handle, cfg.profile.capture_ram_dir);
        // Sampled here, closest to the syscall stream it corrects.
        auto sample = st.driver.sample_guest_clock(*st.handle);
        st.manifest.guest_clock_offset_ns = sample.estimated_offset_ns();
        st.manifest.applied.clock_offset_uncertainty_ns = sample.bracket_half_width_ns();
    });

    run_step(PipelineStep::EXECUTE_BINARY, [&] {
        st.guest_stdout_path = cfg.profile.capture_ram_dir + "/binary.stdout";
        st.guest_stderr_path = cfg.profile.capture_ram_dir + "/binary.stderr";
        std::string cmd = vm::shell_quote(st.guest_binary_path);
        for (const auto& a : cfg.args)
            cmd += " " + vm::shell_quote(a);
        cmd += " > " + st.guest_stdout_path + " 2> " + st.guest_stderr_path;
        st.manifest.t_exec_start = wall_clock_ns();
        st.binary_job = st.driver.exec_guest_background(*st.handle, cmd);
    });

    run_step(PipelineStep::WAIT_DURATION, [&] {
        const std::int64_t deadline =
            st.manifest.t_exec_start +
            static_cast<std::int64_t>(cfg.exec_duration_s) * 1000000000LL;
        while (wall_clock_ns() < deadline) {
            if (!st.driver.guest_job_running(*st.handle, *st.binary_job))
                break; // natural exit ends the wait early
            sleep_ms(std::min<std::int64_t>(20, (deadline - wall_clock_ns()) / 1000000 + 1));
        }
    });

    run_step(PipelineStep::HALT_EXECUTION, [&] {
        if (st.driver.guest_job_running(*st.handle, *st.binary_job))
            st.driver.halt_job(*st.handle, *st.binary_job);
        st.binary_job.reset();
        st.manifest.t_exec_halt = wall_clock_ns();
    });

    run_step(PipelineStep::STOP_COLLECTORS, [&] {
        st.syscap.stop(st.driver, *st.handle);
        if (st.hpc_capture) {
            collectors::stop_host_capture(st.driver, *st.hpc_capture);
            st.hpc_capture.reset();
        }
        if (st.pcap_capture) {
            collectors::stop_host_capture(st.driver, *st.pcap_capture);
            st.pcap_capture.reset();
        }
        if (st.emulator) {
            st.emulator->stop();
            netemu::write_report(*st.emulator, run_dir);
            st.netemu_report_written = true;
            st.manifest.artifacts["fakenet.log"] = "fakenet.log";
            st.manifest.artifacts["fakenet_report.html"] = "fakenet_report.html";
        }
    });

    run_step(PipelineStep::POST_RUN_HOOKS, [&] {
        execute_hooks(config::HookStage::POST_RUN, cfg, &st.driver, &*st.handle, recorder,
                      st.manifest.hooks_executed);
    });

    run_step(PipelineStep::COPY_OUT, [&] {
        st.driver.copy_out(*st.handle, st.syscap.scap_path(), run_dir / "syscalls.scap");
        st.driver.copy_out(*st.handle, st.syscap.text_path(), run_dir / "syscalls.txt");
        st.driver.copy_out(*st.handle, st.guest_stdout_path, run_dir / "binary.stdout");
        st.driver.copy_out(*st.handle, st.guest_stderr_path, run_dir / "binary.stderr");
        st.manifest.artifacts["syscalls.scap"] = "syscalls.scap";
        st.manifest.artifacts["syscalls.txt"] = "syscalls.txt";
        st.manifest.artifacts["binary.stdout"] = "binary.stdout";
        st.manifest.artifacts["binary.stderr"] = "binary.stderr";
    });

    run_step(PipelineStep::SHUTDOWN_VM, [&] {
        st.driver.shutdown(*st.handle, kShutdownGraceS);
        st.vm_down = true;
        st.manifest.t_shutdown = wall_clock_ns();
    });

    run_step(PipelineStep::POST_SHUTDOWN_HOOKS, [&] {
        execute_hooks(config::HookStage::POST_SHUTDOWN, cfg, nullptr, nullptr, recorder,
                      st.manifest.hooks_executed);
    });

    st.cleanup(); // NAT teardown and belt-and-braces stop of anything left

    st.manifest.artifacts["run.json"] = "run.json";
    write_manifest(st.manifest, run_dir / "run.json");

    return RunResult{std::move(st.manifest), run_dir};
}

} // namespace samosa::pipeline
