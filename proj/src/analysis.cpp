// SPDX-License-Identifier: Apache-2.0
#include "samosa/analysis.hpp"

#include "samosa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace samosa::analysis {

namespace {

bool in_window(std::int64_t ts, const Timeline& tl) {
    return ts >= tl.t0_ns && ts <= tl.t1_ns; // inclusive at both endpoints
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + path.string());
    std::vector<std::uint8_t> out((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    return out;
}

std::string read_file_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

std::vector<collectors::SyscallEvent>
shift_syscalls(std::vector<collectors::SyscallEvent> events, std::int64_t delta_ns) {
    for (auto& e : events)
        e.guest_ts_ns += delta_ns;
    return events;
}

ClippedStreams align_and_clip(const std::vector<collectors::SyscallEvent>& syscalls,
                              const std::vector<collectors::HpcSample>& hpc,
                              const std::vector<collectors::PacketRecord>& packets,
                              const std::vector<collectors::DiskEvent>& disk,
                              const Timeline& tl, std::int64_t hpc_anchor_ns) {
    ClippedStreams out;

    auto& sys_stats = out.stats["syscalls"];
    for (const auto& e : syscalls) {
        const std::int64_t host_ts = e.guest_ts_ns - tl.guest_offset_ns;
        if (in_window(host_ts, tl)) {
            auto copy = e;
            copy.guest_ts_ns = host_ts;
            out.syscalls.push_back(std::move(copy));
            ++sys_stats.kept;
        } else {
            ++sys_stats.dropped;
        }
    }

    auto& hpc_stats = out.stats["hpc"];
    for (const auto& s : hpc) {
        const std::int64_t host_ts =
            hpc_anchor_ns + static_cast<std::int64_t>(std::llround(s.rel_ts_s * 1e9));
        if (in_window(host_ts, tl)) {
            out.hpc.emplace_back(host_ts, s);
            ++hpc_stats.kept;
        } else {
            ++hpc_stats.dropped;
        }
    }

    auto& net_stats = out.stats["network"];
    for (const auto& p : packets) {
        if (in_window(p.host_ts_ns, tl)) {
            out.packets.push_back(p);
            ++net_stats.kept;
        } else {
            ++net_stats.dropped;
        }
    }

    auto& disk_stats = out.stats["disk"];
    for (const auto& d : disk) {
        if (in_window(d.host_ts_ns, tl)) {
            out.disk.push_back(d);
            ++disk_stats.kept;
        } else {
            ++disk_stats.dropped;
        }
    }

    return out;
}

std::uint64_t NetSeries::total_tx_bytes() const {
    std::uint64_t sum = 0;
    for (const auto& b : bins)
        sum += b.tx_bytes;
    return sum;
}

std::uint64_t NetSeries::total_rx_bytes() const {
    std::uint64_t sum = 0;
    for (const auto& b : bins)
        sum += b.rx_bytes;
    return sum;
}

NetSeries aggregate_network(const std::vector<collectors::PacketRecord>& clipped,
                            const Timeline& tl, std::uint32_t window_ms) {
    if (window_ms == 0)
        throw SchemaError("network window must be positive");

    NetSeries series;
    series.window_ms = window_ms;
    series.t0_ns = tl.t0_ns;

    const std::int64_t w_ns = static_cast<std::int64_t>(window_ms) * 1000000LL;
    const std::int64_t span = tl.t1_ns - tl.t0_ns;
    // Clipping is inclusive at t1, so an event exactly at t1 needs the bin
    // that starts at the last full boundary.
    const std::size_t nbins = static_cast<std::size_t>(span / w_ns) + 1;
    series.bins.resize(nbins);
    for (std::size_t b = 0; b < nbins; ++b)
        series.bins[b].bin_start_ns = tl.t0_ns + static_cast<std::int64_t>(b) * w_ns;

    for (const auto& p : clipped) {
        if (p.direction == collectors::PacketDirection::OTHER)
            continue;
        const auto b = static_cast<std::size_t>((p.host_ts_ns - tl.t0_ns) / w_ns);
        if (b >= nbins)
            continue; // cannot happen for clipped input
        if (p.direction == collectors::PacketDirection::TX)
            series.bins[b].tx_bytes += p.wire_len_bytes;
        else
            series.bins[b].rx_bytes += p.wire_len_bytes;
    }

    // Integer byte sums stay exact; the rate division happens only here.
    const double window_s = static_cast<double>(window_ms) / 1000.0;
    for (auto& b : series.bins) {
        b.tx_kb_s = static_cast<double>(b.tx_bytes) / 1024.0 / window_s;
        b.rx_kb_s = static_cast<double>(b.rx_bytes) / 1024.0 / window_s;
    }
    return series;
}

SyscallScatter rank_syscalls(const std::vector<collectors::SyscallEvent>& clipped,
                             std::size_t k) {
    if (k < 1)
        throw SchemaError("rank_syscalls requires k >= 1");

    std::unordered_map<std::string, SyscallRank> by_name;
    for (const auto& e : clipped) {
        if (e.direction != collectors::SyscallDirection::ENTER)
            continue;
        auto& entry = by_name[e.syscall];
        entry.syscall = e.syscall;
        entry.count += 1;
        entry.timestamps.push_back(e.guest_ts_ns);
    }

    std::vector<SyscallRank> ranked;
    ranked.reserve(by_name.size());
    for (auto& [name, entry] : by_name) {
        std::sort(entry.timestamps.begin(), entry.timestamps.end());
        ranked.push_back(std::move(entry));
    }
    std::sort(ranked.begin(), ranked.end(), [](const SyscallRank& a, const SyscallRank& b) {
        if (a.count != b.count)
            return a.count > b.count;
        return a.syscall < b.syscall;
    });
    if (ranked.size() > k)
        ranked.resize(k);

    SyscallScatter out;
    out.k = k;
    out.ranked = std::move(ranked);
    return out;
}

DiskScatter build_disk_scatter(const std::vector<collectors::DiskEvent>& clipped,
                               config::DiskDevice device) {
    DiskScatter out;
    out.unit = device == config::DiskDevice::NVME ? AddressUnit::LBA : AddressUnit::SECTOR;
    out.points.reserve(clipped.size());
    for (const auto& d : clipped)
        out.points.push_back({d.host_ts_ns, d.address, d.op});
    return out;
}

HpcSeries build_hpc_series(
    const std::vector<std::pair<std::int64_t, collectors::HpcSample>>& clipped) {
    HpcSeries out;
    for (const auto& [host_ts, sample] : clipped) {
        if (!sample.value) {
            ++out.not_counted;
            continue;
        }
        auto& series = out.counters[sample.counter];
        if (!series.empty() && host_ts <= series.back().host_ts_ns) {
            ++out.dropped_nonmonotonic;
            continue;
        }
        series.push_back({host_ts, *sample.value});
    }
    return out;
}

std::vector<EndpointTraffic>
endpoint_breakdown(const std::vector<collectors::PacketRecord>& clipped) {
    struct Key {
        std::string ip;
        std::int32_t port; // -1 = none
        bool tx;
        bool operator<(const Key& o) const {
            return std::tie(ip, port, tx) < std::tie(o.ip, o.port, o.tx);
        }
    };
    std::map<Key, EndpointTraffic> acc;
    for (const auto& p : clipped) {
        if (p.direction == collectors::PacketDirection::OTHER)
            continue;
        const bool tx = p.direction == collectors::PacketDirection::TX;
        const std::string& remote_ip = tx ? p.dst_ip : p.src_ip;
        const auto& remote_port = tx ? p.dst_port : p.src_port;
        Key key{remote_ip, remote_port ? *remote_port : -1, tx};
        auto& e = acc[key];
        e.remote_ip = remote_ip;
        e.remote_port = remote_port;
        e.direction = p.direction;
        e.packets += 1;
        e.bytes += p.wire_len_bytes;
    }
    std::vector<EndpointTraffic> out;
    out.reserve(acc.size());
    for (auto& [key, e] : acc)
        out.push_back(std::move(e));
    return out;
}

AggregatedReport build_report(const ClippedStreams& streams,
                              const pipeline::RunManifest& manifest,
                              std::uint32_t window_ms, std::size_t top_k) {
    AggregatedReport report;
    report.timeline.t0_ns = manifest.t_exec_start;
    report.timeline.t1_ns = manifest.t_exec_halt;
    report.timeline.guest_offset_ns = manifest.guest_clock_offset_ns;
    report.net = aggregate_network(streams.packets, report.timeline, window_ms);
    report.syscalls = rank_syscalls(streams.syscalls, top_k);
    report.disk = build_disk_scatter(streams.disk, manifest.applied.disk_device);
    report.hpc = build_hpc_series(streams.hpc);
    report.endpoints = endpoint_breakdown(streams.packets);
    report.clip_stats = streams.stats;
    report.manifest = manifest;
    return report;
}

AggregatedReport analyze_run(const std::filesystem::path& run_dir, std::size_t top_k,
                             std::uint32_t window_ms) {
    auto manifest = pipeline::load_manifest(run_dir / "run.json");

    auto missing = verify_inventory(run_dir, manifest.network_mode,
                                    /*include_emitted=*/false);
    if (!missing.empty()) {
        std::string names;
        for (const auto& m : missing)
            names += (names.empty() ? "" : ", ") + m;
        throw MissingArtifact(missing, "run directory is missing: " + names);
    }

    if (manifest.t_exec_start == 0 || manifest.t_exec_halt <= manifest.t_exec_start)
        throw SchemaError("manifest has no valid execution window");

    auto hpc_anchor = manifest.step_ts(pipeline::PipelineStep::START_HPC);
    if (!hpc_anchor)
        throw SchemaError("manifest step log has no START_HPC entry");

    auto sys_parse = collectors::parse_syscall_text(read_file_text(run_dir / "syscalls.txt"));
    auto hpc_parse = collectors::parse_hpc_csv(read_file_text(run_dir / "hpc.csv"));
    auto pcap_parse =
        collectors::parse_pcap(read_file_bytes(run_dir / "capture.pcap"),
                               manifest.applied.guest_ip);
    auto disk_parse = collectors::parse_disk_trace(read_file_text(run_dir / "disk.trace"),
                                                   manifest.applied.disk_device);

    Timeline tl;
    tl.t0_ns = manifest.t_exec_start;
    tl.t1_ns = manifest.t_exec_halt;
    tl.guest_offset_ns = manifest.guest_clock_offset_ns;

    auto clipped = align_and_clip(sys_parse.events, hpc_parse.samples, pcap_parse.packets,
                                  disk_parse.events, tl, *hpc_anchor);

    const std::uint32_t window =
        window_ms != 0 ? window_ms
                       : (manifest.applied.net_window_ms != 0 ? manifest.applied.net_window_ms
                                                              : 1);
    return build_report(clipped, manifest, window, top_k);
}

} // namespace samosa::analysis
