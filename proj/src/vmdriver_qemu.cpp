// SPDX-License-Identifier: Apache-2.0
#include "samosa/vmdriver.hpp"

#include "samosa/clock.hpp"
#include "samosa/errors.hpp"
#include "samosa/subprocess.hpp"

#include <csignal>
#include <map>

namespace samosa::vm {

namespace {

// SSH reports 255 for its own failures; remote exits use the rest.
constexpr int kSshFailureExit = 255;

class QemuDriver : public Driver {
public:
    explicit QemuDriver(std::filesystem::path run_dir) : run_dir_(std::move(run_dir)) {}

    VmHandle boot(const BootCommand& cmd, const config::VmProfile& profile,
                  int timeout_s) override {
        profile_ = profile;
        emulator_ = proc::Child::spawn(cmd.tokens, run_dir_ / "qemu.stdout",
                                       run_dir_ / "qemu.stderr");

        VmHandle h;
        h.backend = BackendKind::QEMU;
        h.guest_ip = profile.guest_ip;
        h.ssh_port = profile.ssh_port;
        h.emulator_pid = emulator_.pid();
        h.snapshot_path = run_dir_ / "snapshot.img";

        const std::int64_t deadline =
            wall_clock_ns() + static_cast<std::int64_t>(timeout_s) * 1000000000LL;
        while (true) {
            if (!emulator_.running()) {
                emulator_.terminate(SIGKILL, 0);
                throw BootTimeout("emulator exited before the guest came up");
            }
            auto probe = proc::run_command(ssh_argv(profile, "true"), 10);
            if (probe.exit_code == 0)
                break;
            if (wall_clock_ns() > deadline) {
                emulator_.terminate(SIGTERM, 3000);
                throw BootTimeout("guest SSH not reachable within " +
                                  std::to_string(timeout_s) + "s");
            }
            sleep_ms(1000);
        }
        h.boot_ts_ns = wall_clock_ns();
        booted_ = true;
        return h;
    }

    void copy_in(VmHandle&, const std::filesystem::path& local,
                 const std::string& guest_path, bool executable) override {
        auto res = proc::run_command(scp_to_guest_argv(profile_, local, guest_path), 300);
        if (res.exit_code != 0) {
            if (res.err.find("No such file or directory") != std::string::npos)
                throw GuestPathError("scp to guest failed: " + res.err);
            throw TransferError("scp to guest failed: " + res.err);
        }
        if (executable) {
            auto chmod = proc::run_command(
                ssh_argv(profile_, "chmod +x " + shell_quote(guest_path)), 30);
            if (chmod.exit_code != 0)
                throw TransferError("chmod on guest binary failed: " + chmod.err);
        }
    }

    void copy_out(VmHandle&, const std::string& guest_path,
                  const std::filesystem::path& local) override {
        auto res = proc::run_command(scp_from_guest_argv(profile_, guest_path, local), 300);
        if (res.exit_code != 0) {
            if (res.err.find("No such file or directory") != std::string::npos)
                throw GuestPathError("scp from guest failed: " + res.err);
            throw TransferError("scp from guest failed: " + res.err);
        }
    }

    GuestExecResult exec_guest(VmHandle&, const std::string& command,
                               int timeout_s) override {
        auto res = proc::run_command(ssh_argv(profile_, command), timeout_s);
        if (res.timed_out)
            throw ExecTimeout("guest command exceeded " + std::to_string(timeout_s) +
                              "s: " + command);
        if (res.exit_code == kSshFailureExit)
            throw SshError("ssh failed: " + res.err);
        GuestExecResult out;
        out.exit_code = res.exit_code;
        out.stdout_bytes = res.out;
        out.stderr_bytes = res.err;
        out.started_ts_ns = res.started_ns;
        out.ended_ts_ns = res.ended_ns;
        return out;
    }

    GuestJobId exec_guest_background(VmHandle& handle, const std::string& command) override {
        const GuestJobId id = next_job_id_++;
        const std::string pidfile = "/tmp/samosa-job-" + std::to_string(id) + ".pid";
        // The wrapper shell becomes a session leader; its pid doubles as the
        // process-group id for halt_job.
        const std::string launch = "setsid sh -c " +
                                   shell_quote("echo $$ > " + pidfile + "; " + command) +
                                   " < /dev/null > /dev/null 2>&1 & true";
        auto res = exec_guest(handle, launch, 30);
        if (res.exit_code != 0)
            throw SshError("background launch failed: " + res.stderr_bytes);

        for (int attempt = 0; attempt < 20; ++attempt) {
            auto pid = exec_guest(handle, "cat " + pidfile + " 2>/dev/null", 10);
            if (pid.exit_code == 0 && !pid.stdout_bytes.empty()) {
                try {
                    guest_pids_[id] = std::stol(pid.stdout_bytes);
                    return id;
                } catch (const std::exception&) {
                }
            }
            sleep_ms(100);
        }
        throw SshError("background job never reported a pid");
    }

    bool guest_job_running(VmHandle& handle, GuestJobId job) override {
        auto it = guest_pids_.find(job);
        if (it == guest_pids_.end())
            return false;
        auto res = exec_guest(handle, "kill -0 " + std::to_string(it->second) +
                                          " 2>/dev/null",
                              10);
        return res.exit_code == 0;
    }

    void halt_job(VmHandle& handle, GuestJobId job) override {
        auto it = guest_pids_.find(job);
        if (it == guest_pids_.end())
            throw SshError("no such guest job: " + std::to_string(job));
        const std::string pg = std::to_string(it->second);
        exec_guest(handle,
                   "kill -TERM -- -" + pg + " 2>/dev/null; sleep 0.3; "
                   "kill -KILL -- -" + pg + " 2>/dev/null; true",
                   30);
        guest_pids_.erase(it);
    }

    ClockSample sample_guest_clock(VmHandle& handle) override {
        ClockSample s;
        s.host_ns_before = wall_clock_ns();
        auto res = exec_guest(handle, "date +%s%N", 15);
        s.host_ns_after = wall_clock_ns();
        if (res.exit_code != 0)
            throw SshError("guest clock read failed: " + res.stderr_bytes);
        try {
            s.guest_ns = std::stoll(res.stdout_bytes);
        } catch (const std::exception&) {
            throw SshError("unparseable guest clock value: " + res.stdout_bytes);
        }
        return s;
    }

    void shutdown(VmHandle& handle, int grace_s) override {
        if (booted_) {
            try {
                exec_guest(handle, "poweroff", 15);
            } catch (const Error&) {
                // halt degrades to emulator-level kill below
            }
        }
        const std::int64_t deadline =
            wall_clock_ns() + static_cast<std::int64_t>(grace_s) * 1000000000LL;
        while (emulator_.running() && wall_clock_ns() < deadline)
            sleep_ms(200);
        if (emulator_.running())
            emulator_.terminate(SIGTERM, 3000);
        booted_ = false;
    }

    HostJobId start_host_capture(HostCaptureKind kind, const std::vector<std::string>& argv,
                                 const std::filesystem::path& output) override {
        (void)kind;
        const HostJobId id = next_job_id_++;
        auto log = output;
        log += ".spawn.log";
        host_jobs_[id] = HostJob{kind, proc::Child::spawn(argv, log, log)};
        return id;
    }

    void stop_host_capture(HostJobId job) override {
        auto it = host_jobs_.find(job);
        if (it == host_jobs_.end())
            throw SpawnError("no such host capture job: " + std::to_string(job));
        // perf flushes interval output on SIGINT; tcpdump on SIGTERM.
        const int signo = it->second.kind == HostCaptureKind::HPC ? SIGINT : SIGTERM;
        it->second.child.terminate(signo, 5000);
        host_jobs_.erase(it);
    }

private:
    struct HostJob {
        HostCaptureKind kind;
        proc::Child child;
    };

    std::filesystem::path run_dir_;
    config::VmProfile profile_;
    proc::Child emulator_;
    bool booted_ = false;
    std::map<GuestJobId, long> guest_pids_;
    std::map<HostJobId, HostJob> host_jobs_;
    std::uint64_t next_job_id_ = 1;
};

} // namespace

std::unique_ptr<Driver> make_qemu_driver(const std::filesystem::path& run_dir) {
    return std::make_unique<QemuDriver>(run_dir);
}

} // namespace samosa::vm
