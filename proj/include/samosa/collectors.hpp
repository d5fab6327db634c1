// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "samosa/config.hpp"
#include "samosa/vmdriver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace samosa::collectors {

// --- event types -------------------------------------------------------------

enum class SyscallDirection { ENTER, EXIT };

struct SyscallEvent {
    std::int64_t guest_ts_ns = 0;
    std::string proc_name;
    std::int64_t tid = 0;
    SyscallDirection direction = SyscallDirection::ENTER;
    std::string syscall;
    std::string info;

    bool operator==(const SyscallEvent&) const = default;
};

struct HpcSample {
    double rel_ts_s = 0.0;                  // seconds since counting start
    std::string counter;
    std::optional<std::uint64_t> value;     // nullopt = <not counted>
    std::string unit;

    bool operator==(const HpcSample&) const = default;
};

enum class IpProtocol { TCP, UDP, OTHER };
enum class PacketDirection { TX, RX, OTHER };

struct PacketRecord {
    std::int64_t host_ts_ns = 0;
    std::string src_ip; // empty when the frame is not IPv4
    std::string dst_ip;
    std::optional<std::uint16_t> src_port;
    std::optional<std::uint16_t> dst_port;
    IpProtocol protocol = IpProtocol::OTHER;
    std::uint32_t wire_len_bytes = 0;
    PacketDirection direction = PacketDirection::OTHER;

    bool operator==(const PacketRecord&) const = default;
};

enum class DiskOp { READ, WRITE };

struct DiskEvent {
    std::int64_t host_ts_ns = 0;
    DiskOp op = DiskOp::READ;
    std::uint64_t address = 0; // LBA for NVMe, sector for virtio
    std::uint32_t nblocks = 1;
    config::DiskDevice device = config::DiskDevice::NVME;

    bool operator==(const DiskEvent&) const = default;
};

// --- parsers -----------------------------------------------------------------
// All parsers are total over arbitrary input: undecodable lines are counted
// and skipped, never fatal. parse_pcap throws only for inputs that are not
// pcap files at all (BadMagic / TruncatedFile before any record).

struct SyscallParse {
    std::vector<SyscallEvent> events;
    std::size_t skipped = 0;
};

/// Sysdig default print lines:
/// `%evt.num %evt.outputtime %evt.cpu %proc.name (%thread.tid) %evt.dir
///  %evt.type %evt.info`.
/// Absolute (`1688998075.123456789`) and time-of-day (`10:01:02.123456789`)
/// timestamps are both accepted.
SyscallParse parse_syscall_text(const std::string& text);

struct HpcParse {
    std::vector<HpcSample> samples;
    std::size_t skipped = 0;
};

/// perf interval CSV: `<rel_ts>,<value>,<unit>,<event>,...`; lines starting
/// with '#' are comments. `<not counted>` / `<not supported>` markers are
/// preserved, never coerced to zero.
HpcParse parse_hpc_csv(const std::string& text);

struct PcapParse {
    std::vector<PacketRecord> packets;
    bool truncated_tail = false; // complete records were returned anyway
};

/// Classic libpcap file (Ethernet link type; µs and ns magic, both byte
/// orders). Direction is derived solely from guest_ip comparison.
PcapParse parse_pcap(const std::vector<std::uint8_t>& bytes, const std::string& guest_ip);

struct DiskTraceEvent {
    std::string event_name;
    config::DiskDevice device;
    DiskOp op;
};

/// Trace event names differ across emulator versions; the defaults cover
/// pci_nvme_* and virtio_blk_handle_*.
const std::vector<DiskTraceEvent>& default_disk_event_table();

struct DiskParse {
    std::vector<DiskEvent> events;
    std::size_t skipped = 0;
};

/// Emulator trace lines `<seconds>.<fraction>: <event> <key> <value>...`.
/// Events not in the table are ignored silently (they are not errors).
DiskParse parse_disk_trace(const std::string& text, config::DiskDevice device,
                           const std::vector<DiskTraceEvent>& table = default_disk_event_table());

// --- normalized event logs (one JSON record per line) -------------------------

std::string to_ndjson(const std::vector<SyscallEvent>& events);
std::string to_ndjson(const std::vector<HpcSample>& samples);
std::string to_ndjson(const std::vector<PacketRecord>& packets);
std::string to_ndjson(const std::vector<DiskEvent>& events);

std::vector<SyscallEvent> syscalls_from_ndjson(const std::string& text);
std::vector<HpcSample> hpc_from_ndjson(const std::string& text);
std::vector<PacketRecord> packets_from_ndjson(const std::string& text);
std::vector<DiskEvent> disk_from_ndjson(const std::string& text);

// --- capture lifecycle ---------------------------------------------------------

/// In-guest syscall capture. One capture per run; stop converts the binary
/// capture to text form inside the guest so both can be copied out.
class SyscallCapture {
public:
    SyscallCapture() = default;

    /// Launches sysdig writing under ram_dir (a tmpfs path). Throws
    /// GuestToolMissing when sysdig is absent, Error on double start.
    void start(vm::Driver& driver, vm::VmHandle& handle, const std::string& ram_dir);
    /// Halts the capture job and renders the text export next to it.
    void stop(vm::Driver& driver, vm::VmHandle& handle);

    bool started() const { return started_; }
    bool stopped() const { return stopped_; }
    vm::GuestJobId job() const { return job_; }
    const std::string& scap_path() const { return scap_path_; }
    const std::string& text_path() const { return text_path_; }

private:
    bool started_ = false;
    bool stopped_ = false;
    vm::GuestJobId job_ = 0;
    std::string scap_path_;
    std::string text_path_;
};

struct HostCapture {
    vm::HostJobId job = 0;
    std::filesystem::path output;
};

/// Interval-mode counting attached to the emulator pid; writes the CSV to
/// `output`.
HostCapture start_hpc(vm::Driver& driver, pid_t emulator_pid,
                      const std::vector<std::string>& events, std::uint32_t interval_ms,
                      const std::filesystem::path& output);

/// tcpdump on the sandbox tap, raw pcap into `output`.
HostCapture start_pcap(vm::Driver& driver, const std::string& tap,
                       const std::filesystem::path& output);

void stop_host_capture(vm::Driver& driver, HostCapture& capture);

// Command lines used by the host captures (exposed for tests).
std::vector<std::string> hpc_argv(pid_t emulator_pid, const std::vector<std::string>& events,
                                  std::uint32_t interval_ms, const std::filesystem::path& output);
std::vector<std::string> pcap_argv(const std::string& tap, const std::filesystem::path& output);

} // namespace samosa::collectors
