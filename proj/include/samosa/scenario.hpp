// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "samosa/config.hpp"
#include "samosa/vmdriver.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace samosa::vm {

/// Scripted reply for one guest command pattern (substring match, first
/// match wins; the empty pattern is the catch-all).
struct ScriptedResponse {
    std::string pattern;
    int exit_code = 0;
    std::string stdout_text;
    std::string stderr_text;
    std::int64_t duration_ms = 0;
};

// Side-channel fixtures expressed relative to binary-execution start, so a
// scripted run produces captures whose timestamps land inside the measured
// window no matter when the run happens.
struct RelSyscall {
    std::int64_t rel_ms = 0;
    std::string proc = "malware";
    std::int64_t tid = 1000;
    bool enter = true;
    std::string name = "read";
    std::string info;
};

struct RelHpc {
    double rel_s = 0.0;
    std::string counter = "instructions";
    std::string value = "0"; // decimal count or "<not counted>"
    std::string unit;
};

struct RelPacket {
    std::int64_t rel_ms = 0;
    std::string src = "192.168.100.2";
    std::string dst = "10.0.2.2";
    std::uint16_t sport = 40000;
    std::uint16_t dport = 80;
    char proto = 't'; // 't' tcp, 'u' udp, 'i' icmp (ip OTHER), 'a' non-IPv4
    std::uint32_t wire_len = 128;
};

struct RelDisk {
    std::int64_t rel_ms = 0;
    bool write = false;
    std::uint64_t address = 0;
    std::uint32_t nblocks = 8;
};

struct EmittedTraces {
    // Literal capture bodies win over the relative fixtures when set.
    std::optional<std::string> syscall_text;
    std::optional<std::string> hpc_csv;
    std::optional<std::vector<std::uint8_t>> pcap_bytes;
    std::optional<std::string> disk_trace_lines;

    std::vector<RelSyscall> syscalls;
    std::vector<RelHpc> hpc;
    std::vector<RelPacket> packets;
    std::vector<RelDisk> disk;
};

/// Full script for one mock-backend run: boot behavior, command responses,
/// emitted side-channel traces, and the guest clock skew.
struct ScenarioScript {
    std::int64_t boot_delay_ms = 5;
    std::int64_t clock_skew_ns = 0;
    bool fail_boot = false;
    bool hang_on_shutdown = false;
    /// 0 = the launched binary runs until halted.
    std::int64_t background_job_duration_ms = 0;
    std::vector<ScriptedResponse> responses;
    EmittedTraces traces;
    std::map<std::string, std::string> guest_files;
    std::vector<std::string> guest_dirs = {"/tmp", "/root", "/dev/shm", "/etc"};
    std::string vm_log_text;
};

/// A busy little run: file-handling syscalls, five HPC counters, DNS+HTTP
/// traffic, and mixed disk reads/writes over three simulated seconds.
ScenarioScript make_default_scenario();

/// Load a scenario from its JSON document (see README for the schema).
ScenarioScript load_scenario(const std::filesystem::path& path);
ScenarioScript parse_scenario_json(const std::string& text);

// --- fixture renderers ------------------------------------------------------

/// Sysdig-style capture lines. Guest timestamps are absolute epoch seconds
/// (`-t a` form): host anchor + rel_ms, shifted by the scripted skew.
std::string render_syscall_text(const std::vector<RelSyscall>& events,
                                std::int64_t exec_anchor_ns,
                                std::int64_t clock_skew_ns);

/// perf-style interval CSV (rows relative to counting start; no anchor).
std::string render_hpc_csv(const std::vector<RelHpc>& rows);

struct PcapRenderOptions {
    bool nanosecond = false;  // ns-resolution magic instead of µs
    bool byteswapped = false; // store the file in swapped byte order
    std::size_t truncate_at = 0; // nonzero: cut the byte stream at this size
};

/// Classic-format pcap bytes for the scripted packets (Ethernet link type).
std::vector<std::uint8_t> render_pcap(const std::vector<RelPacket>& packets,
                                      std::int64_t exec_anchor_ns,
                                      const PcapRenderOptions& opts = {});

/// Emulator trace lines (`<sec>.<usec>: <event> ...`) for the device's
/// read/write events.
std::string render_disk_trace(const std::vector<RelDisk>& events,
                              std::int64_t exec_anchor_ns, config::DiskDevice device);

// --- mock backend ----------------------------------------------------------

/// Fully scripted backend: every operation yields the scenario's outputs,
/// making pipeline and analysis runs deterministic with no emulator, root
/// privileges, or malware. Exposes its internal state so tests can assert
/// cleanup totality.
class MockDriver : public Driver {
public:
    explicit MockDriver(ScenarioScript scenario);
    ~MockDriver() override;

    VmHandle boot(const BootCommand& cmd, const config::VmProfile& profile,
                  int timeout_s) override;
    void copy_in(VmHandle& handle, const std::filesystem::path& local,
                 const std::string& guest_path, bool executable) override;
    void copy_out(VmHandle& handle, const std::string& guest_path,
                  const std::filesystem::path& local) override;
    GuestExecResult exec_guest(VmHandle& handle, const std::string& command,
                               int timeout_s) override;
    GuestJobId exec_guest_background(VmHandle& handle, const std::string& command) override;
    bool guest_job_running(VmHandle& handle, GuestJobId job) override;
    void halt_job(VmHandle& handle, GuestJobId job) override;
    ClockSample sample_guest_clock(VmHandle& handle) override;
    void shutdown(VmHandle& handle, int grace_s) override;
    HostJobId start_host_capture(HostCaptureKind kind, const std::vector<std::string>& argv,
                                 const std::filesystem::path& output) override;
    void stop_host_capture(HostJobId job) override;

    // Introspection for tests.
    std::size_t live_guest_jobs() const;
    std::size_t live_host_jobs() const;
    bool emulator_running() const { return emulator_running_; }
    bool emulator_terminated() const { return emulator_terminated_; }
    const std::vector<std::string>& exec_log() const { return exec_log_; }
    std::optional<std::string> guest_file(const std::string& path) const;
    const ScenarioScript& scenario() const { return scenario_; }

private:
    struct GuestJob {
        std::string command;
        std::int64_t started_ns = 0;
        std::int64_t duration_ms = 0; // 0 = until halted
        bool halted = false;
        bool finalized = false;
    };
    struct HostJob {
        HostCaptureKind kind;
        std::filesystem::path output;
        bool running = true;
    };

    const ScriptedResponse* match_response(const std::string& command) const;
    void require_booted() const;
    bool guest_dir_exists(const std::string& path) const;
    void finish_guest_job(GuestJob& job);
    void apply_redirects(const std::string& command, const std::string& out,
                         const std::string& err);
    void write_disk_trace();

    ScenarioScript scenario_;
    bool booted_ = false;
    bool emulator_running_ = false;
    bool emulator_terminated_ = false;
    BootCommand boot_cmd_;
    std::map<std::string, std::string> guest_fs_;
    std::vector<std::string> guest_dirs_;
    std::map<GuestJobId, GuestJob> guest_jobs_;
    std::map<HostJobId, HostJob> host_jobs_;
    std::vector<std::string> exec_log_;
    std::uint64_t next_job_id_ = 1;
    std::optional<std::int64_t> exec_anchor_ns_; // dispatch time of the binary
};

std::unique_ptr<MockDriver> make_mock_driver(ScenarioScript scenario);

} // namespace samosa::vm
