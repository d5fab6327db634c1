// SPDX-License-Identifier: Apache-2.0
//
// Text parsers for the syscall capture export, the perf interval CSV, and
// the emulator disk-trace stream. Total over arbitrary input: bad lines are
// counted, never fatal.

#include "samosa/collectors.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <sstream>

namespace samosa::collectors {

namespace {

std::vector<std::string> split_ws(const std::string& line, std::size_t max_fields) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size() && out.size() < max_fields) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
            ++i;
        if (i >= line.size())
            break;
        if (out.size() == max_fields - 1) {
            out.push_back(line.substr(i));
            return out;
        }
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
            ++i;
        out.push_back(line.substr(start, i - start));
    }
    return out;
}

bool parse_i64(const std::string& s, std::int64_t& out) {
    if (s.empty())
        return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
    if (s.empty())
        return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

// "<digits>.<digits>" to nanoseconds; the fraction is right-padded/truncated
// to 9 digits.
bool parse_sec_frac_ns(const std::string& s, std::int64_t& out) {
    std::size_t dot = s.find('.');
    std::int64_t secs = 0;
    std::string frac;
    if (dot == std::string::npos) {
        if (!parse_i64(s, secs))
            return false;
    } else {
        if (!parse_i64(s.substr(0, dot), secs))
            return false;
        frac = s.substr(dot + 1);
        if (frac.empty())
            return false;
        for (char c : frac)
            if (!std::isdigit(static_cast<unsigned char>(c)))
                return false;
    }
    frac.resize(9, '0');
    std::int64_t frac_ns = 0;
    if (!parse_i64(frac.substr(0, 9), frac_ns))
        return false;
    out = secs * 1000000000LL + (secs < 0 ? -frac_ns : frac_ns);
    return true;
}

// Sysdig prints either absolute epoch seconds or HH:MM:SS.frac depending on
// the -t flag; the latter maps to nanoseconds since midnight.
bool parse_capture_timestamp(const std::string& s, std::int64_t& out) {
    if (s.find(':') == std::string::npos)
        return parse_sec_frac_ns(s, out);
    std::int64_t h = 0, m = 0, sec_ns = 0;
    std::size_t c1 = s.find(':');
    std::size_t c2 = s.find(':', c1 + 1);
    if (c2 == std::string::npos)
        return false;
    if (!parse_i64(s.substr(0, c1), h) || !parse_i64(s.substr(c1 + 1, c2 - c1 - 1), m))
        return false;
    if (h < 0 || h > 23 || m < 0 || m > 59)
        return false;
    if (!parse_sec_frac_ns(s.substr(c2 + 1), sec_ns) || sec_ns < 0 ||
        sec_ns >= 61LL * 1000000000LL)
        return false;
    out = (h * 3600 + m * 60) * 1000000000LL + sec_ns;
    return true;
}

std::vector<std::string> split_csv(const std::string& line) {
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

} // namespace

SyscallParse parse_syscall_text(const std::string& text) {
    SyscallParse out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        bool blank = true;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c)))
                blank = false;
        if (blank)
            continue;

        // <num> <time> <cpu> <proc...> (<tid>) <dir> <type> [info]
        auto fields = split_ws(line, 64);
        if (fields.size() < 6) {
            ++out.skipped;
            continue;
        }

        std::int64_t evt_num = 0;
        std::int64_t ts = 0;
        std::int64_t cpu = 0;
        if (!parse_i64(fields[0], evt_num) || !parse_capture_timestamp(fields[1], ts) ||
            !parse_i64(fields[2], cpu)) {
            ++out.skipped;
            continue;
        }

        // Process names may contain spaces: scan for the "(tid)" token.
        std::size_t tid_idx = 0;
        std::int64_t tid = 0;
        for (std::size_t i = 3; i < fields.size(); ++i) {
            const std::string& f = fields[i];
            if (f.size() >= 3 && f.front() == '(' && f.back() == ')' &&
                parse_i64(f.substr(1, f.size() - 2), tid)) {
                tid_idx = i;
                break;
            }
        }
        if (tid_idx < 4 || tid_idx + 2 >= fields.size()) {
            ++out.skipped;
            continue;
        }

        const std::string& dir = fields[tid_idx + 1];
        if (dir != ">" && dir != "<") {
            ++out.skipped;
            continue;
        }
        const std::string& name = fields[tid_idx + 2];
        if (name.empty()) {
            ++out.skipped;
            continue;
        }

        SyscallEvent ev;
        ev.guest_ts_ns = ts;
        for (std::size_t i = 3; i < tid_idx; ++i) {
            if (i > 3)
                ev.proc_name += ' ';
            ev.proc_name += fields[i];
        }
        ev.tid = tid;
        ev.direction = dir == ">" ? SyscallDirection::ENTER : SyscallDirection::EXIT;
        ev.syscall = name;
        for (std::size_t i = tid_idx + 3; i < fields.size(); ++i) {
            if (i > tid_idx + 3)
                ev.info += ' ';
            ev.info += fields[i];
        }
        out.events.push_back(std::move(ev));
    }
    return out;
}

HpcParse parse_hpc_csv(const std::string& text) {
    HpcParse out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line[0] == '#')
            continue; // perf banner/comment rows

        auto fields = split_csv(line);
        if (fields.size() < 4) {
            ++out.skipped;
            continue;
        }

        HpcSample s;
        // Field 0 is the interval timestamp (may carry leading spaces).
        std::string ts = fields[0];
        ts.erase(0, ts.find_first_not_of(" \t"));
        char* end = nullptr;
        s.rel_ts_s = std::strtod(ts.c_str(), &end);
        if (end == ts.c_str() || *end != '\0') {
            ++out.skipped;
            continue;
        }

        const std::string& value = fields[1];
        if (value == "<not counted>" || value == "<not supported>") {
            s.value = std::nullopt;
        } else {
            std::uint64_t v = 0;
            if (parse_u64(value, v)) {
                s.value = v;
            } else {
                // Some events report fractional counts (e.g. task-clock msec).
                char* vend = nullptr;
                double d = std::strtod(value.c_str(), &vend);
                if (vend == value.c_str() || *vend != '\0' || d < 0) {
                    ++out.skipped;
                    continue;
                }
                s.value = static_cast<std::uint64_t>(d + 0.5);
            }
        }
        s.unit = fields[2];
        s.counter = fields[3];
        if (s.counter.empty()) {
            ++out.skipped;
            continue;
        }
        out.samples.push_back(std::move(s));
    }
    return out;
}

const std::vector<DiskTraceEvent>& default_disk_event_table() {
    static const std::vector<DiskTraceEvent> table = {
        {"pci_nvme_read", config::DiskDevice::NVME, DiskOp::READ},
        {"pci_nvme_write", config::DiskDevice::NVME, DiskOp::WRITE},
        {"nvme_read", config::DiskDevice::NVME, DiskOp::READ},
        {"nvme_write", config::DiskDevice::NVME, DiskOp::WRITE},
        {"virtio_blk_handle_read", config::DiskDevice::VIRTIO_BLK, DiskOp::READ},
        {"virtio_blk_handle_write", config::DiskDevice::VIRTIO_BLK, DiskOp::WRITE},
    };
    return table;
}

DiskParse parse_disk_trace(const std::string& text, config::DiskDevice device,
                           const std::vector<DiskTraceEvent>& table) {
    DiskParse out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;

        // <seconds>.<fraction>:<event_name> <key value>...
        std::size_t colon = line.find(':');
        if (colon == std::string::npos || colon == 0) {
            ++out.skipped;
            continue;
        }
        std::int64_t ts_ns = 0;
        if (!parse_sec_frac_ns(line.substr(0, colon), ts_ns)) {
            ++out.skipped;
            continue;
        }

        auto rest = split_ws(line.substr(colon + 1), 64);
        if (rest.empty())
            continue; // timestamp with no event: nothing recognizable
        const std::string& event_name = rest[0];

        const DiskTraceEvent* match = nullptr;
        for (const auto& entry : table)
            if (entry.event_name == event_name)
                match = &entry;
        if (!match || match->device != device)
            continue; // unrelated trace event, ignored silently

        // NVMe carries slba/nlb; virtio carries sector plus a count key.
        std::optional<std::uint64_t> address;
        std::optional<std::uint64_t> count;
        for (std::size_t i = 1; i + 1 < rest.size(); i += 1) {
            const std::string& key = rest[i];
            std::uint64_t value = 0;
            if (!parse_u64(rest[i + 1], value))
                continue;
            if (key == "slba" || key == "sector")
                address = value;
            else if (key == "nlb" || key == "nsectors" || key == "nsect" || key == "count")
                count = value;
        }
        if (!address || !count || *count == 0) {
            ++out.skipped;
            continue;
        }

        DiskEvent ev;
        ev.host_ts_ns = ts_ns;
        ev.op = match->op;
        ev.address = *address;
        ev.nblocks = static_cast<std::uint32_t>(*count);
        ev.device = match->device;
        out.events.push_back(ev);
    }
    return out;
}

} // namespace samosa::collectors
