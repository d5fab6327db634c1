// SPDX-License-Identifier: Apache-2.0
//
// Normalized newline-delimited event logs: one JSON record per line, schema
// fixed by the collector event types. Round-trips losslessly.

#include "samosa/collectors.hpp"
#include "samosa/errors.hpp"

#include <sstream>

#include <json.hpp>

namespace samosa::collectors {

namespace {

using nlohmann::json;

template <typename T, typename ToJson>
std::string lines_of(const std::vector<T>& items, ToJson to_json) {
    std::ostringstream out;
    for (const auto& item : items)
        out << to_json(item).dump() << "\n";
    return out.str();
}

template <typename T, typename FromJson>
std::vector<T> items_of(const std::string& text, FromJson from_json) {
    std::vector<T> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        try {
            out.push_back(from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw SchemaError("ndjson line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

} // namespace

std::string to_ndjson(const std::vector<SyscallEvent>& events) {
    return lines_of(events, [](const SyscallEvent& e) {
        return json{{"guest_ts_ns", e.guest_ts_ns},
                    {"proc_name", e.proc_name},
                    {"tid", e.tid},
                    {"direction", e.direction == SyscallDirection::ENTER ? "enter" : "exit"},
                    {"syscall", e.syscall},
                    {"info", e.info}};
    });
}

std::string to_ndjson(const std::vector<HpcSample>& samples) {
    return lines_of(samples, [](const HpcSample& s) {
        json j{{"rel_ts_s", s.rel_ts_s}, {"counter", s.counter}, {"unit", s.unit}};
        if (s.value)
            j["value"] = *s.value;
        else
            j["value"] = nullptr;
        return j;
    });
}

std::string to_ndjson(const std::vector<PacketRecord>& packets) {
    return lines_of(packets, [](const PacketRecord& p) {
        json j{{"host_ts_ns", p.host_ts_ns},
               {"src_ip", p.src_ip},
               {"dst_ip", p.dst_ip},
               {"protocol", p.protocol == IpProtocol::TCP   ? "tcp"
                            : p.protocol == IpProtocol::UDP ? "udp"
                                                            : "other"},
               {"wire_len_bytes", p.wire_len_bytes},
               {"direction", p.direction == PacketDirection::TX   ? "tx"
                             : p.direction == PacketDirection::RX ? "rx"
                                                                  : "other"}};
        j["src_port"] = p.src_port ? json(*p.src_port) : json(nullptr);
        j["dst_port"] = p.dst_port ? json(*p.dst_port) : json(nullptr);
        return j;
    });
}

std::string to_ndjson(const std::vector<DiskEvent>& events) {
    return lines_of(events, [](const DiskEvent& e) {
        return json{{"host_ts_ns", e.host_ts_ns},
                    {"op", e.op == DiskOp::READ ? "read" : "write"},
                    {"address", e.address},
                    {"nblocks", e.nblocks},
                    {"device", config::to_string(e.device)}};
    });
}

std::vector<SyscallEvent> syscalls_from_ndjson(const std::string& text) {
    return items_of<SyscallEvent>(text, [](const json& j) {
        SyscallEvent e;
        e.guest_ts_ns = j.at("guest_ts_ns").get<std::int64_t>();
        e.proc_name = j.at("proc_name").get<std::string>();
        e.tid = j.at("tid").get<std::int64_t>();
        e.direction = j.at("direction").get<std::string>() == "enter"
                          ? SyscallDirection::ENTER
                          : SyscallDirection::EXIT;
        e.syscall = j.at("syscall").get<std::string>();
        e.info = j.at("info").get<std::string>();
        return e;
    });
}

std::vector<HpcSample> hpc_from_ndjson(const std::string& text) {
    return items_of<HpcSample>(text, [](const json& j) {
        HpcSample s;
        s.rel_ts_s = j.at("rel_ts_s").get<double>();
        s.counter = j.at("counter").get<std::string>();
        s.unit = j.at("unit").get<std::string>();
        if (!j.at("value").is_null())
            s.value = j.at("value").get<std::uint64_t>();
        return s;
    });
}

std::vector<PacketRecord> packets_from_ndjson(const std::string& text) {
    return items_of<PacketRecord>(text, [](const json& j) {
        PacketRecord p;
        p.host_ts_ns = j.at("host_ts_ns").get<std::int64_t>();
        p.src_ip = j.at("src_ip").get<std::string>();
        p.dst_ip = j.at("dst_ip").get<std::string>();
        const std::string proto = j.at("protocol").get<std::string>();
        p.protocol = proto == "tcp"   ? IpProtocol::TCP
                     : proto == "udp" ? IpProtocol::UDP
                                      : IpProtocol::OTHER;
        p.wire_len_bytes = j.at("wire_len_bytes").get<std::uint32_t>();
        const std::string dir = j.at("direction").get<std::string>();
        p.direction = dir == "tx"   ? PacketDirection::TX
                      : dir == "rx" ? PacketDirection::RX
                                    : PacketDirection::OTHER;
        if (!j.at("src_port").is_null())
            p.src_port = j.at("src_port").get<std::uint16_t>();
        if (!j.at("dst_port").is_null())
            p.dst_port = j.at("dst_port").get<std::uint16_t>();
        return p;
    });
}

std::vector<DiskEvent> disk_from_ndjson(const std::string& text) {
    return items_of<DiskEvent>(text, [](const json& j) {
        DiskEvent e;
        e.host_ts_ns = j.at("host_ts_ns").get<std::int64_t>();
        e.op = j.at("op").get<std::string>() == "read" ? DiskOp::READ : DiskOp::WRITE;
        e.address = j.at("address").get<std::uint64_t>();
        e.nblocks = j.at("nblocks").get<std::uint32_t>();
        e.device = config::disk_device_from_string(j.at("device").get<std::string>());
        return e;
    });
}

} // namespace samosa::collectors
