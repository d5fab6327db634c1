// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "samosa/config.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <sys/types.h>

namespace samosa::vm {

enum class BackendKind { QEMU, MOCK };

/// Deterministic emulator invocation for one run.
struct BootCommand {
    std::vector<std::string> tokens;        // argv, tokens[0] is the emulator
    std::filesystem::path trace_output;     // disk-trace lines land here
    std::string tap;                        // host tap interface
};

struct VmHandle {
    BackendKind backend = BackendKind::MOCK;
    std::string guest_ip;
    std::uint16_t ssh_port = 22;
    std::optional<pid_t> emulator_pid;      // QEMU backend only
    std::filesystem::path snapshot_path;    // always a copy, never the base image
    std::int64_t boot_ts_ns = 0;
};

struct GuestExecResult {
    int exit_code = -1;
    std::string stdout_bytes;
    std::string stderr_bytes;
    std::int64_t started_ts_ns = 0;
    std::int64_t ended_ts_ns = 0;
};

/// One guest wall-clock read bracketed by host timestamps. The offset
/// estimate is guest minus the bracket midpoint; the half width bounds its
/// error.
struct ClockSample {
    std::int64_t guest_ns = 0;
    std::int64_t host_ns_before = 0;
    std::int64_t host_ns_after = 0;

    std::int64_t estimated_offset_ns() const {
        return guest_ns - (host_ns_before + (host_ns_after - host_ns_before) / 2);
    }
    std::int64_t bracket_half_width_ns() const {
        return (host_ns_after - host_ns_before) / 2;
    }
};

using GuestJobId = std::uint64_t;
using HostJobId = std::uint64_t;

enum class HostCaptureKind { HPC, PCAP };

/// Backend abstraction over the sandbox VM plus the host-side capture
/// processes it owns. The pipeline drives exactly one VM per driver.
class Driver {
public:
    virtual ~Driver() = default;

    virtual VmHandle boot(const BootCommand& cmd, const config::VmProfile& profile,
                          int timeout_s) = 0;
    /// Byte-identical transfer; `executable` additionally sets the exec bit
    /// (used when the source is the target binary).
    virtual void copy_in(VmHandle& handle, const std::filesystem::path& local,
                         const std::string& guest_path, bool executable) = 0;
    virtual void copy_out(VmHandle& handle, const std::string& guest_path,
                          const std::filesystem::path& local) = 0;
    virtual GuestExecResult exec_guest(VmHandle& handle, const std::string& command,
                                       int timeout_s) = 0;
    virtual GuestJobId exec_guest_background(VmHandle& handle,
                                             const std::string& command) = 0;
    virtual bool guest_job_running(VmHandle& handle, GuestJobId job) = 0;
    /// Kills the background job's whole process group.
    virtual void halt_job(VmHandle& handle, GuestJobId job) = 0;
    virtual ClockSample sample_guest_clock(VmHandle& handle) = 0;
    /// Clean power-off, then force-terminate the emulator after grace_s.
    virtual void shutdown(VmHandle& handle, int grace_s) = 0;

    virtual HostJobId start_host_capture(HostCaptureKind kind,
                                         const std::vector<std::string>& argv,
                                         const std::filesystem::path& output) = 0;
    virtual void stop_host_capture(HostJobId job) = 0;
};

/// Construct the per-architecture emulator command line: machine/CPU/device
/// clauses, memory and cores, tap attachment, and disk-trace enablement for
/// the profile's device. Deterministic for equal inputs.
BootCommand build_boot_command(const config::VmProfile& profile, const std::string& run_id,
                               const std::filesystem::path& snapshot,
                               const std::string& tap);

/// Place a disposable copy of the base image under run_dir (copy-on-write
/// overlay when tooling and format allow, full copy otherwise). The base
/// image is never written.
std::filesystem::path clone_snapshot(const config::VmProfile& profile,
                                     const std::filesystem::path& run_dir);

// Shell/SSH command construction, shared by the QEMU backend and its tests.
std::string shell_quote(const std::string& s);
std::vector<std::string> ssh_argv(const config::VmProfile& profile,
                                  const std::string& remote_command);
std::vector<std::string> scp_to_guest_argv(const config::VmProfile& profile,
                                           const std::filesystem::path& local,
                                           const std::string& guest_path);
std::vector<std::string> scp_from_guest_argv(const config::VmProfile& profile,
                                             const std::string& guest_path,
                                             const std::filesystem::path& local);

std::unique_ptr<Driver> make_qemu_driver(const std::filesystem::path& run_dir);

} // namespace samosa::vm
