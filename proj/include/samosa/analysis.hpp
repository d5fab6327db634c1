// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "samosa/collectors.hpp"
#include "samosa/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace samosa::analysis {

/// The measured window: everything outside [t0, t1] is discarded.
struct Timeline {
    std::int64_t t0_ns = 0;           // t_exec_start
    std::int64_t t1_ns = 0;           // t_exec_halt
    std::int64_t guest_offset_ns = 0; // guest clock minus host clock
};

struct ClipStats {
    std::size_t kept = 0;
    std::size_t dropped = 0;
};

/// The four streams on the host timeline, clipped inclusively to [t0, t1].
/// Syscall timestamps have been shifted by -guest_offset_ns; HPC samples are
/// anchored to the host time counting started.
struct ClippedStreams {
    std::vector<collectors::SyscallEvent> syscalls; // guest_ts_ns now host time
    std::vector<std::pair<std::int64_t, collectors::HpcSample>> hpc;
    std::vector<collectors::PacketRecord> packets;
    std::vector<collectors::DiskEvent> disk;
    std::map<std::string, ClipStats> stats; // "syscalls","hpc","network","disk"
};

ClippedStreams align_and_clip(const std::vector<collectors::SyscallEvent>& syscalls,
                              const std::vector<collectors::HpcSample>& hpc,
                              const std::vector<collectors::PacketRecord>& packets,
                              const std::vector<collectors::DiskEvent>& disk,
                              const Timeline& tl, std::int64_t hpc_anchor_ns);

/// Pure timestamp shift (offset correction is exactly this, so shifting by
/// delta and then -delta restores the input bit-exactly).
std::vector<collectors::SyscallEvent>
shift_syscalls(std::vector<collectors::SyscallEvent> events, std::int64_t delta_ns);

// --- network -----------------------------------------------------------------

struct NetBin {
    std::int64_t bin_start_ns = 0;
    std::uint64_t tx_bytes = 0; // exact byte sums; rates derived at emission
    std::uint64_t rx_bytes = 0;
    double tx_kb_s = 0.0;
    double rx_kb_s = 0.0;
};

struct NetSeries {
    std::uint32_t window_ms = 1;
    std::int64_t t0_ns = 0;
    std::vector<NetBin> bins; // contiguous from t0, width window_ms

    std::uint64_t total_tx_bytes() const;
    std::uint64_t total_rx_bytes() const;
};

/// TX/RX kilobytes-per-second over half-open bins [t0+b·w, t0+(b+1)·w).
/// Byte totals across bins equal the clipped packet byte totals exactly.
NetSeries aggregate_network(const std::vector<collectors::PacketRecord>& clipped,
                            const Timeline& tl, std::uint32_t window_ms = 1);

// --- syscalls ----------------------------------------------------------------

struct SyscallRank {
    std::string syscall;
    std::uint64_t count = 0;                // ENTER events
    std::vector<std::int64_t> timestamps;   // ENTER timestamps, host ns
};

struct SyscallScatter {
    std::size_t k = 0;
    std::vector<SyscallRank> ranked; // count desc, ties broken lexicographically
};

SyscallScatter rank_syscalls(const std::vector<collectors::SyscallEvent>& clipped,
                             std::size_t k);

// --- disk ---------------------------------------------------------------------

enum class AddressUnit { LBA, SECTOR };

struct DiskPoint {
    std::int64_t host_ts_ns = 0;
    std::uint64_t address = 0;
    collectors::DiskOp op = collectors::DiskOp::READ;
};

struct DiskScatter {
    AddressUnit unit = AddressUnit::LBA;
    std::vector<DiskPoint> points;
};

DiskScatter build_disk_scatter(const std::vector<collectors::DiskEvent>& clipped,
                               config::DiskDevice device);

// --- HPC ----------------------------------------------------------------------

struct HpcPoint {
    std::int64_t host_ts_ns = 0;
    std::uint64_t value = 0;
};

struct HpcSeries {
    std::map<std::string, std::vector<HpcPoint>> counters; // strictly increasing ts
    std::uint64_t not_counted = 0;          // markers omitted from the series
    std::uint64_t dropped_nonmonotonic = 0; // defensive quality counter
};

HpcSeries build_hpc_series(
    const std::vector<std::pair<std::int64_t, collectors::HpcSample>>& clipped);

/// Per-remote-endpoint traffic totals (the non-guest side of each clipped
/// TX/RX packet).
struct EndpointTraffic {
    std::string remote_ip;
    std::optional<std::uint16_t> remote_port;
    collectors::PacketDirection direction = collectors::PacketDirection::TX;
    std::uint64_t packets = 0;
    std::uint64_t bytes = 0;
};

std::vector<EndpointTraffic>
endpoint_breakdown(const std::vector<collectors::PacketRecord>& clipped);

// --- report -------------------------------------------------------------------

struct AggregatedReport {
    Timeline timeline;
    NetSeries net;
    SyscallScatter syscalls;
    DiskScatter disk;
    HpcSeries hpc;
    std::vector<EndpointTraffic> endpoints;
    std::map<std::string, ClipStats> clip_stats;
    pipeline::RunManifest manifest;
};

/// Assemble every plot-ready series from the clipped streams.
AggregatedReport build_report(const ClippedStreams& streams,
                              const pipeline::RunManifest& manifest,
                              std::uint32_t window_ms, std::size_t top_k);

/// Load run.json plus the four captures from a run directory, align, clip,
/// and aggregate. window_ms = 0 means "use the run's configured window".
AggregatedReport analyze_run(const std::filesystem::path& run_dir, std::size_t top_k = 15,
                             std::uint32_t window_ms = 0);

/// Write the per-channel CSVs and the multi-panel report.svg, then verify
/// the run-directory inventory. Throws MissingArtifact naming every absent
/// file. Returns the files written.
std::vector<std::filesystem::path> emit_outputs(const AggregatedReport& report,
                                                const std::filesystem::path& dir);

/// Names of missing normative artifacts in dir (empty = complete).
/// Emulation-mode runs additionally require the fakenet outputs; emitted
/// analysis files are checked when include_emitted is set.
std::vector<std::string> verify_inventory(const std::filesystem::path& dir,
                                          config::NetworkMode mode, bool include_emitted);

// CSV round-trip loaders for the emitted series.
NetSeries load_net_series_csv(const std::filesystem::path& path);
SyscallScatter load_syscall_scatter_csv(const std::filesystem::path& path);
DiskScatter load_disk_scatter_csv(const std::filesystem::path& path);
HpcSeries load_hpc_series_csv(const std::filesystem::path& path);

/// Static multi-panel SVG (HPC lines, disk scatter, syscall strip, network
/// rates). Valid XML, no external references.
void write_report_svg(const AggregatedReport& report, const std::filesystem::path& path);

} // namespace samosa::analysis
