// SPDX-License-Identifier: Apache-2.0
#include "samosa/scenario.hpp"

#include "samosa/errors.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace samosa::vm {

namespace {

using nlohmann::json;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v, bool swapped) {
    if (swapped) {
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v & 0xff));
    } else {
        out.push_back(static_cast<std::uint8_t>(v & 0xff));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v, bool swapped) {
    if (swapped) {
        put_u16(out, static_cast<std::uint16_t>(v >> 16), true);
        put_u16(out, static_cast<std::uint16_t>(v & 0xffff), true);
    } else {
        put_u16(out, static_cast<std::uint16_t>(v & 0xffff), false);
        put_u16(out, static_cast<std::uint16_t>(v >> 16), false);
    }
}

// Network byte order (big endian) regardless of file endianness.
void net_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

std::array<std::uint8_t, 4> ip_octets(const std::string& ip) {
    std::array<std::uint8_t, 4> out{};
    if (!config::is_valid_ipv4(ip))
        throw SchemaError("scenario packet has invalid IPv4 address '" + ip + "'");
    size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        size_t dot = ip.find('.', pos);
        out[static_cast<size_t>(i)] =
            static_cast<std::uint8_t>(std::stoi(ip.substr(pos, dot - pos)));
        pos = dot + 1;
    }
    return out;
}

std::uint16_t ipv4_header_checksum(const std::uint8_t* hdr, size_t len) {
    std::uint32_t sum = 0;
    for (size_t i = 0; i + 1 < len; i += 2)
        sum += static_cast<std::uint32_t>((hdr[i] << 8) | hdr[i + 1]);
    while (sum >> 16)
        sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

std::vector<std::uint8_t> build_frame(const RelPacket& p) {
    std::vector<std::uint8_t> f;
    const std::uint8_t dst_mac[6] = {0x52, 0x54, 0x00, 0x12, 0x34, 0x56};
    const std::uint8_t src_mac[6] = {0x52, 0x54, 0x00, 0x65, 0x43, 0x21};
    f.insert(f.end(), dst_mac, dst_mac + 6);
    f.insert(f.end(), src_mac, src_mac + 6);

    if (p.proto == 'a') {
        net_u16(f, 0x0806); // ARP: a non-IPv4 frame
        std::size_t target = std::max<std::size_t>(p.wire_len, f.size() + 28);
        f.resize(target, 0);
        return f;
    }

    net_u16(f, 0x0800);
    std::size_t l4_len = p.proto == 't' ? 20u : 8u;
    std::size_t min_len = 14 + 20 + l4_len;
    std::size_t total = std::max<std::size_t>(p.wire_len, min_len);
    std::uint16_t ip_total = static_cast<std::uint16_t>(total - 14);

    std::size_t ip_start = f.size();
    f.push_back(0x45); // version 4, IHL 5
    f.push_back(0x00);
    net_u16(f, ip_total);
    net_u16(f, 0x1234); // identification
    net_u16(f, 0x4000); // DF
    f.push_back(64);    // TTL
    f.push_back(p.proto == 't' ? 6 : p.proto == 'u' ? 17 : 1);
    net_u16(f, 0); // checksum placeholder
    auto src = ip_octets(p.src);
    auto dst = ip_octets(p.dst);
    f.insert(f.end(), src.begin(), src.end());
    f.insert(f.end(), dst.begin(), dst.end());
    std::uint16_t csum = ipv4_header_checksum(f.data() + ip_start, 20);
    f[ip_start + 10] = static_cast<std::uint8_t>(csum >> 8);
    f[ip_start + 11] = static_cast<std::uint8_t>(csum & 0xff);

    if (p.proto == 't') {
        net_u16(f, p.sport);
        net_u16(f, p.dport);
        put_u32(f, 0, true); // seq (big endian)
        put_u32(f, 0, true); // ack
        f.push_back(0x50);   // data offset 5
        f.push_back(0x18);   // PSH|ACK
        net_u16(f, 65535);
        net_u16(f, 0); // checksum (not validated by consumers)
        net_u16(f, 0); // urgent
    } else if (p.proto == 'u') {
        net_u16(f, p.sport);
        net_u16(f, p.dport);
        net_u16(f, static_cast<std::uint16_t>(total - 34));
        net_u16(f, 0);
    } else {
        f.push_back(8); // ICMP echo request
        f.push_back(0);
        net_u16(f, 0);
        put_u32(f, 0, true);
    }
    f.resize(total, 0);
    return f;
}

} // namespace

std::string render_syscall_text(const std::vector<RelSyscall>& events,
                                std::int64_t exec_anchor_ns,
                                std::int64_t clock_skew_ns) {
    std::ostringstream out;
    std::size_t num = 0;
    for (const auto& e : events) {
        ++num;
        const std::int64_t guest_ts =
            exec_anchor_ns + e.rel_ms * 1000000LL + clock_skew_ns;
        char ts[40];
        std::snprintf(ts, sizeof(ts), "%" PRId64 ".%09" PRId64, guest_ts / 1000000000LL,
                      guest_ts % 1000000000LL);
        out << num << " " << ts << " " << (num % 4) << " " << e.proc << " (" << e.tid
            << ") " << (e.enter ? ">" : "<") << " " << e.name;
        if (!e.info.empty())
            out << " " << e.info;
        out << "\n";
    }
    return out.str();
}

std::string render_hpc_csv(const std::vector<RelHpc>& rows) {
    std::ostringstream out;
    out << "# started on Thu Jan  1 00:00:00 1970\n";
    for (const auto& r : rows) {
        char ts[32];
        std::snprintf(ts, sizeof(ts), "%.6f", r.rel_s);
        long long running = static_cast<long long>(r.rel_s * 1e9);
        out << ts << "," << r.value << "," << r.unit << "," << r.counter << ","
            << running << ",100.00,,\n";
    }
    return out.str();
}

std::vector<std::uint8_t> render_pcap(const std::vector<RelPacket>& packets,
                                      std::int64_t exec_anchor_ns,
                                      const PcapRenderOptions& opts) {
    std::vector<std::uint8_t> out;
    const bool sw = opts.byteswapped;
    put_u32(out, opts.nanosecond ? 0xa1b23c4dU : 0xa1b2c3d4U, sw);
    put_u16(out, 2, sw);  // version major
    put_u16(out, 4, sw);  // version minor
    put_u32(out, 0, sw);  // thiszone
    put_u32(out, 0, sw);  // sigfigs
    put_u32(out, 65535, sw);
    put_u32(out, 1, sw);  // LINKTYPE_ETHERNET

    for (const auto& p : packets) {
        const std::int64_t ts_ns = exec_anchor_ns + p.rel_ms * 1000000LL;
        auto frame = build_frame(p);
        put_u32(out, static_cast<std::uint32_t>(ts_ns / 1000000000LL), sw);
        const std::int64_t frac = ts_ns % 1000000000LL;
        put_u32(out,
                static_cast<std::uint32_t>(opts.nanosecond ? frac : frac / 1000), sw);
        put_u32(out, static_cast<std::uint32_t>(frame.size()), sw);
        put_u32(out, static_cast<std::uint32_t>(frame.size()), sw);
        out.insert(out.end(), frame.begin(), frame.end());
    }

    if (opts.truncate_at != 0 && opts.truncate_at < out.size())
        out.resize(opts.truncate_at);
    return out;
}

std::string render_disk_trace(const std::vector<RelDisk>& events,
                              std::int64_t exec_anchor_ns, config::DiskDevice device) {
    std::ostringstream out;
    for (const auto& e : events) {
        const std::int64_t ts_ns = exec_anchor_ns + e.rel_ms * 1000000LL;
        char ts[40];
        std::snprintf(ts, sizeof(ts), "%" PRId64 ".%06" PRId64, ts_ns / 1000000000LL,
                      (ts_ns % 1000000000LL) / 1000);
        if (device == config::DiskDevice::NVME) {
            out << ts << ": " << (e.write ? "pci_nvme_write" : "pci_nvme_read")
                << " cid 1 nsid 1 slba " << e.address << " nlb " << e.nblocks << "\n";
        } else {
            out << ts << ": "
                << (e.write ? "virtio_blk_handle_write" : "virtio_blk_handle_read")
                << " vdev 0x55aa req 0x1000 sector " << e.address << " nsectors "
                << e.nblocks << "\n";
        }
    }
    return out.str();
}

ScenarioScript make_default_scenario() {
    ScenarioScript s;
    s.boot_delay_ms = 10;
    s.clock_skew_ns = 0;
    s.background_job_duration_ms = 0;

    s.responses.push_back({"echo hi", 0, "hi\n", "", 0});
    s.responses.push_back({"command -v sysdig", 0, "/usr/bin/sysdig\n", "", 0});
    s.responses.push_back({"", 0, "", "", 0});

    s.vm_log_text =
        "[    0.000000] Linux version 5.4.0 (mock)\n"
        "[    1.204311] systemd[1]: Reached target Multi-User System.\n"
        "login: root (automatic login)\n";

    auto& t = s.traces;

    // Directory enumeration at the start, then a steady encrypt-like mix.
    const char* startup[] = {"statx", "getdents64", "readlinkat", "openat"};
    for (int i = 0; i < 12; ++i)
        t.syscalls.push_back({5 + i * 4, "malware", 2817, true, startup[i % 4],
                              "fd=3 name=/home/user/docs"});
    const char* steady[] = {"read", "write", "llseek", "close", "openat", "getrandom"};
    for (int i = 0; i < 120; ++i) {
        t.syscalls.push_back({60 + i * 24, "malware", 2817, true, steady[i % 6],
                              "fd=5 size=4096"});
        t.syscalls.push_back({60 + i * 24 + 1, "malware", 2817, false, steady[i % 6],
                              "res=4096"});
    }

    const char* counters[] = {"instructions", "branch-instructions", "dTLB-loads",
                              "L1-dcache-loads", "mem-stores"};
    for (int interval = 1; interval <= 30; ++interval) {
        for (int c = 0; c < 5; ++c) {
            RelHpc row;
            row.rel_s = interval * 0.1;
            row.counter = counters[c];
            if (interval == 17 && c == 4)
                row.value = "<not counted>";
            else
                row.value = std::to_string(1000000 + (interval * 137 + c * 911) % 900000);
            t.hpc.push_back(row);
        }
    }

    // DNS lookup, HTTP download, then periodic beacons.
    t.packets.push_back({12, "192.168.100.2", "192.168.100.1", 54321, 53, 'u', 78});
    t.packets.push_back({14, "192.168.100.1", "192.168.100.2", 53, 54321, 'u', 94});
    t.packets.push_back({30, "192.168.100.2", "10.0.2.2", 40001, 80, 't', 74});
    t.packets.push_back({32, "10.0.2.2", "192.168.100.2", 80, 40001, 't', 74});
    t.packets.push_back({35, "192.168.100.2", "10.0.2.2", 40001, 80, 't', 187});
    for (int i = 0; i < 18; ++i)
        t.packets.push_back({40 + i * 20, "10.0.2.2", "192.168.100.2", 80, 40001, 't',
                             static_cast<std::uint32_t>(1514 - (i % 3) * 400)});
    for (int i = 0; i < 5; ++i) {
        t.packets.push_back({500 + i * 500, "192.168.100.2", "10.0.2.2", 40002, 443,
                             't', 120});
        t.packets.push_back({502 + i * 500, "10.0.2.2", "192.168.100.2", 443, 40002,
                             't', 120});
    }

    for (int i = 0; i < 24; ++i)
        t.disk.push_back({20 + i * 9, false, 2048 + static_cast<std::uint64_t>(i) * 8, 8});
    for (int i = 0; i < 36; ++i)
        t.disk.push_back({300 + i * 60, (i % 3) != 0,
                          2048 + static_cast<std::uint64_t>(i % 24) * 8, 8});

    return s;
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key))
        return fallback;
    return j.at(key).get<T>();
}

} // namespace

ScenarioScript parse_scenario_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SyntaxError(std::string("scenario JSON: ") + e.what());
    }

    try {
        ScenarioScript s;
        s.boot_delay_ms = get_or<std::int64_t>(j, "boot_delay_ms", s.boot_delay_ms);
        s.clock_skew_ns = get_or<std::int64_t>(j, "clock_skew_ns", s.clock_skew_ns);
        s.fail_boot = get_or<bool>(j, "fail_boot", false);
        s.hang_on_shutdown = get_or<bool>(j, "hang_on_shutdown", false);
        s.background_job_duration_ms =
            get_or<std::int64_t>(j, "background_job_duration_ms", 0);
        s.vm_log_text = get_or<std::string>(j, "vm_log_text", s.vm_log_text);

        if (j.contains("responses")) {
            for (const auto& r : j.at("responses")) {
                ScriptedResponse sr;
                sr.pattern = get_or<std::string>(r, "pattern", "");
                sr.exit_code = get_or<int>(r, "exit_code", 0);
                sr.stdout_text = get_or<std::string>(r, "stdout", "");
                sr.stderr_text = get_or<std::string>(r, "stderr", "");
                sr.duration_ms = get_or<std::int64_t>(r, "duration_ms", 0);
                s.responses.push_back(std::move(sr));
            }
        }
        if (j.contains("guest_files"))
            for (const auto& [k, v] : j.at("guest_files").items())
                s.guest_files[k] = v.get<std::string>();
        if (j.contains("guest_dirs"))
            s.guest_dirs = j.at("guest_dirs").get<std::vector<std::string>>();

        if (j.contains("traces")) {
            const auto& tj = j.at("traces");
            auto& t = s.traces;
            if (tj.contains("syscall_text"))
                t.syscall_text = tj.at("syscall_text").get<std::string>();
            if (tj.contains("hpc_csv"))
                t.hpc_csv = tj.at("hpc_csv").get<std::string>();
            if (tj.contains("disk_trace_lines"))
                t.disk_trace_lines = tj.at("disk_trace_lines").get<std::string>();
            if (tj.contains("syscalls")) {
                for (const auto& e : tj.at("syscalls")) {
                    RelSyscall r;
                    r.rel_ms = get_or<std::int64_t>(e, "rel_ms", 0);
                    r.proc = get_or<std::string>(e, "proc", "malware");
                    r.tid = get_or<std::int64_t>(e, "tid", 1000);
                    r.enter = get_or<bool>(e, "enter", true);
                    r.name = get_or<std::string>(e, "name", "read");
                    r.info = get_or<std::string>(e, "info", "");
                    t.syscalls.push_back(std::move(r));
                }
            }
            if (tj.contains("hpc")) {
                for (const auto& e : tj.at("hpc")) {
                    RelHpc r;
                    r.rel_s = get_or<double>(e, "rel_s", 0.0);
                    r.counter = get_or<std::string>(e, "counter", "instructions");
                    r.value = get_or<std::string>(e, "value", "0");
                    r.unit = get_or<std::string>(e, "unit", "");
                    t.hpc.push_back(std::move(r));
                }
            }
            if (tj.contains("packets")) {
                for (const auto& e : tj.at("packets")) {
                    RelPacket r;
                    r.rel_ms = get_or<std::int64_t>(e, "rel_ms", 0);
                    r.src = get_or<std::string>(e, "src", r.src);
                    r.dst = get_or<std::string>(e, "dst", r.dst);
                    r.sport = static_cast<std::uint16_t>(get_or<int>(e, "sport", r.sport));
                    r.dport = static_cast<std::uint16_t>(get_or<int>(e, "dport", r.dport));
                    std::string proto = get_or<std::string>(e, "proto", "tcp");
                    r.proto = proto == "udp"    ? 'u'
                              : proto == "icmp" ? 'i'
                              : proto == "arp"  ? 'a'
                                                : 't';
                    r.wire_len = static_cast<std::uint32_t>(
                        get_or<int>(e, "wire_len", static_cast<int>(r.wire_len)));
                    t.packets.push_back(std::move(r));
                }
            }
            if (tj.contains("disk")) {
                for (const auto& e : tj.at("disk")) {
                    RelDisk r;
                    r.rel_ms = get_or<std::int64_t>(e, "rel_ms", 0);
                    r.write = get_or<bool>(e, "write", false);
                    r.address = get_or<std::uint64_t>(e, "address", 0);
                    r.nblocks = static_cast<std::uint32_t>(get_or<int>(e, "nblocks", 8));
                    t.disk.push_back(std::move(r));
                }
            }
        }
        return s;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("scenario JSON: ") + e.what());
    }
}

ScenarioScript load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read scenario file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_json(buf.str());
}

} // namespace samosa::vm
