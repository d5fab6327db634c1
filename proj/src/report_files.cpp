// SPDX-License-Identifier: Apache-2.0
//
// CSV emission and reload for the aggregated series, plus the Appendix-style
// run-directory inventory check.

#include "samosa/analysis.hpp"
#include "samosa/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace samosa::analysis {

namespace {

const std::vector<std::string>& emitted_file_names() {
    static const std::vector<std::string> names = {
        "net_series.csv", "syscall_scatter.csv", "disk_scatter.csv", "hpc_series.csv",
        "report.svg"};
    return names;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

template <typename T>
T parse_num(const std::string& s, const char* what) {
    T v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw SchemaError(std::string("bad ") + what + " value '" + s + "'");
    return v;
}

std::vector<std::vector<std::string>> load_csv_rows(const std::filesystem::path& path,
                                                    const std::string& expected_header) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw SchemaError(path.string() + " is empty");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != expected_header)
        throw SchemaError(path.string() + " has unexpected header '" + line + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        rows.push_back(split_csv_line(line));
    }
    return rows;
}

} // namespace

std::vector<std::string> verify_inventory(const std::filesystem::path& dir,
                                          config::NetworkMode mode, bool include_emitted) {
    std::vector<std::string> missing;
    auto check = [&](const std::vector<std::string>& names) {
        for (const auto& name : names) {
            std::error_code ec;
            if (!std::filesystem::exists(dir / name, ec))
                missing.push_back(name);
        }
    };
    check(pipeline::core_artifact_names());
    if (mode == config::NetworkMode::EMULATED)
        check(pipeline::netemu_artifact_names());
    if (include_emitted)
        check(emitted_file_names());
    return missing;
}

std::vector<std::filesystem::path> emit_outputs(const AggregatedReport& report,
                                                const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::vector<std::filesystem::path> written;

    {
        auto out = open_for_write(dir / "net_series.csv");
        out << "bin_start_ns,window_ms,tx_bytes,rx_bytes,tx_kb_s,rx_kb_s\n";
        char buf[64];
        for (const auto& b : report.net.bins) {
            std::snprintf(buf, sizeof(buf), "%.6f", b.tx_kb_s);
            std::string tx_rate = buf;
            std::snprintf(buf, sizeof(buf), "%.6f", b.rx_kb_s);
            out << b.bin_start_ns << "," << report.net.window_ms << "," << b.tx_bytes
                << "," << b.rx_bytes << "," << tx_rate << "," << buf << "\n";
        }
        written.push_back(dir / "net_series.csv");
    }

    {
        auto out = open_for_write(dir / "syscall_scatter.csv");
        out << "rank,syscall,count,ts_ns\n";
        for (std::size_t r = 0; r < report.syscalls.ranked.size(); ++r) {
            const auto& entry = report.syscalls.ranked[r];
            for (std::int64_t ts : entry.timestamps)
                out << (r + 1) << "," << entry.syscall << "," << entry.count << "," << ts
                    << "\n";
        }
        written.push_back(dir / "syscall_scatter.csv");
    }

    {
        auto out = open_for_write(dir / "disk_scatter.csv");
        out << "ts_ns,address,op,unit\n";
        const char* unit = report.disk.unit == AddressUnit::LBA ? "lba" : "sector";
        for (const auto& p : report.disk.points)
            out << p.host_ts_ns << "," << p.address << ","
                << (p.op == collectors::DiskOp::READ ? "read" : "write") << "," << unit
                << "\n";
        written.push_back(dir / "disk_scatter.csv");
    }

    {
        auto out = open_for_write(dir / "hpc_series.csv");
        out << "counter,ts_ns,value\n";
        for (const auto& [counter, points] : report.hpc.counters)
            for (const auto& p : points)
                out << counter << "," << p.host_ts_ns << "," << p.value << "\n";
        written.push_back(dir / "hpc_series.csv");
    }

    {
        // Optional per-endpoint breakdown; not part of the normative layout.
        auto out = open_for_write(dir / "net_endpoints.csv");
        out << "remote_ip,remote_port,direction,packets,bytes\n";
        for (const auto& e : report.endpoints) {
            out << e.remote_ip << ",";
            if (e.remote_port)
                out << *e.remote_port;
            out << ","
                << (e.direction == collectors::PacketDirection::TX ? "tx" : "rx") << ","
                << e.packets << "," << e.bytes << "\n";
        }
        written.push_back(dir / "net_endpoints.csv");
    }

    write_report_svg(report, dir / "report.svg");
    written.push_back(dir / "report.svg");

    auto missing =
        verify_inventory(dir, report.manifest.network_mode, /*include_emitted=*/true);
    if (!missing.empty()) {
        std::string names;
        for (const auto& m : missing)
            names += (names.empty() ? "" : ", ") + m;
        throw MissingArtifact(missing, "run directory is missing: " + names);
    }
    return written;
}

NetSeries load_net_series_csv(const std::filesystem::path& path) {
    NetSeries series;
    auto rows = load_csv_rows(path, "bin_start_ns,window_ms,tx_bytes,rx_bytes,tx_kb_s,rx_kb_s");
    for (const auto& f : rows) {
        if (f.size() != 6)
            throw SchemaError("net_series.csv row has " + std::to_string(f.size()) +
                              " fields");
        NetBin bin;
        bin.bin_start_ns = parse_num<std::int64_t>(f[0], "bin_start_ns");
        series.window_ms = parse_num<std::uint32_t>(f[1], "window_ms");
        bin.tx_bytes = parse_num<std::uint64_t>(f[2], "tx_bytes");
        bin.rx_bytes = parse_num<std::uint64_t>(f[3], "rx_bytes");
        // Rates are derived values; recompute from the exact byte counts.
        const double window_s = static_cast<double>(series.window_ms) / 1000.0;
        bin.tx_kb_s = static_cast<double>(bin.tx_bytes) / 1024.0 / window_s;
        bin.rx_kb_s = static_cast<double>(bin.rx_bytes) / 1024.0 / window_s;
        series.bins.push_back(bin);
    }
    if (!series.bins.empty())
        series.t0_ns = series.bins.front().bin_start_ns;
    return series;
}

SyscallScatter load_syscall_scatter_csv(const std::filesystem::path& path) {
    SyscallScatter scatter;
    auto rows = load_csv_rows(path, "rank,syscall,count,ts_ns");
    for (const auto& f : rows) {
        if (f.size() != 4)
            throw SchemaError("syscall_scatter.csv row has " + std::to_string(f.size()) +
                              " fields");
        const auto rank = parse_num<std::size_t>(f[0], "rank");
        if (rank == 0)
            throw SchemaError("syscall_scatter.csv rank must start at 1");
        if (scatter.ranked.size() < rank)
            scatter.ranked.resize(rank);
        auto& entry = scatter.ranked[rank - 1];
        entry.syscall = f[1];
        entry.count = parse_num<std::uint64_t>(f[2], "count");
        entry.timestamps.push_back(parse_num<std::int64_t>(f[3], "ts_ns"));
    }
    scatter.k = scatter.ranked.size();
    return scatter;
}

DiskScatter load_disk_scatter_csv(const std::filesystem::path& path) {
    DiskScatter scatter;
    auto rows = load_csv_rows(path, "ts_ns,address,op,unit");
    for (const auto& f : rows) {
        if (f.size() != 4)
            throw SchemaError("disk_scatter.csv row has " + std::to_string(f.size()) +
                              " fields");
        DiskPoint p;
        p.host_ts_ns = parse_num<std::int64_t>(f[0], "ts_ns");
        p.address = parse_num<std::uint64_t>(f[1], "address");
        p.op = f[2] == "read" ? collectors::DiskOp::READ : collectors::DiskOp::WRITE;
        scatter.unit = f[3] == "lba" ? AddressUnit::LBA : AddressUnit::SECTOR;
        scatter.points.push_back(p);
    }
    return scatter;
}

HpcSeries load_hpc_series_csv(const std::filesystem::path& path) {
    HpcSeries series;
    auto rows = load_csv_rows(path, "counter,ts_ns,value");
    for (const auto& f : rows) {
        if (f.size() != 3)
            throw SchemaError("hpc_series.csv row has " + std::to_string(f.size()) +
                              " fields");
        series.counters[f[0]].push_back({parse_num<std::int64_t>(f[1], "ts_ns"),
                                         parse_num<std::uint64_t>(f[2], "value")});
    }
    return series;
}

} // namespace samosa::analysis
