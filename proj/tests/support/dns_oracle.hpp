// SPDX-License-Identifier: Apache-2.0
//
// Independent DNS message dissector used to verify emulator responses. Kept
// deliberately separate from the production encoder: this walks the message
// per RFC 1035 wire rules, including compression pointers.

#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace testsupport {

struct DnsAnswerRecord {
    std::string name;
    std::uint16_t type = 0;
    std::uint16_t klass = 0;
    std::uint32_t ttl = 0;
    std::vector<std::uint8_t> rdata;

    std::string rdata_as_ipv4() const {
        if (rdata.size() != 4)
            return "";
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", rdata[0], rdata[1], rdata[2],
                      rdata[3]);
        return buf;
    }
};

struct DnsMessage {
    std::uint16_t id = 0;
    bool qr = false;
    std::uint8_t opcode = 0;
    std::uint8_t rcode = 0;
    std::uint16_t qdcount = 0;
    std::uint16_t ancount = 0;
    std::string question_name;
    std::uint16_t question_type = 0;
    std::vector<DnsAnswerRecord> answers;
};

class DnsDissector {
public:
    /// Returns nullopt when the bytes do not decode as a DNS message.
    static std::optional<DnsMessage> dissect(const std::vector<std::uint8_t>& bytes) {
        DnsDissector d(bytes);
        return d.run();
    }

private:
    explicit DnsDissector(const std::vector<std::uint8_t>& b) : bytes_(b) {}

    std::optional<DnsMessage> run() {
        if (bytes_.size() < 12)
            return std::nullopt;
        DnsMessage m;
        m.id = u16(0);
        std::uint16_t flags = u16(2);
        m.qr = (flags & 0x8000) != 0;
        m.opcode = static_cast<std::uint8_t>((flags >> 11) & 0xf);
        m.rcode = static_cast<std::uint8_t>(flags & 0xf);
        m.qdcount = u16(4);
        m.ancount = u16(6);

        std::size_t pos = 12;
        for (std::uint16_t q = 0; q < m.qdcount; ++q) {
            auto name = read_name(pos);
            if (!name)
                return std::nullopt;
            if (q == 0)
                m.question_name = *name;
            if (pos + 4 > bytes_.size())
                return std::nullopt;
            if (q == 0)
                m.question_type = u16(pos);
            pos += 4;
        }
        for (std::uint16_t a = 0; a < m.ancount; ++a) {
            DnsAnswerRecord rec;
            auto name = read_name(pos);
            if (!name)
                return std::nullopt;
            rec.name = *name;
            if (pos + 10 > bytes_.size())
                return std::nullopt;
            rec.type = u16(pos);
            rec.klass = u16(pos + 2);
            rec.ttl = (static_cast<std::uint32_t>(u16(pos + 4)) << 16) | u16(pos + 6);
            std::uint16_t rdlen = u16(pos + 8);
            pos += 10;
            if (pos + rdlen > bytes_.size())
                return std::nullopt;
            rec.rdata.assign(bytes_.begin() + static_cast<long>(pos),
                             bytes_.begin() + static_cast<long>(pos + rdlen));
            pos += rdlen;
            m.answers.push_back(std::move(rec));
        }
        return m;
    }

    std::uint16_t u16(std::size_t off) const {
        return static_cast<std::uint16_t>((bytes_[off] << 8) | bytes_[off + 1]);
    }

    // Reads a possibly-compressed domain name starting at pos; advances pos
    // past the in-place representation.
    std::optional<std::string> read_name(std::size_t& pos) const {
        std::string out;
        std::size_t cursor = pos;
        bool jumped = false;
        int guard = 0;
        while (true) {
            if (++guard > 128 || cursor >= bytes_.size())
                return std::nullopt;
            std::uint8_t len = bytes_[cursor];
            if ((len & 0xc0) == 0xc0) {
                if (cursor + 1 >= bytes_.size())
                    return std::nullopt;
                std::uint16_t target = static_cast<std::uint16_t>(((len & 0x3f) << 8) |
                                                                  bytes_[cursor + 1]);
                if (!jumped)
                    pos = cursor + 2;
                jumped = true;
                cursor = target;
                continue;
            }
            if (len == 0) {
                if (!jumped)
                    pos = cursor + 1;
                return out;
            }
            if (len > 63 || cursor + 1 + len > bytes_.size())
                return std::nullopt;
            out.append(reinterpret_cast<const char*>(bytes_.data()) + cursor + 1, len);
            out += '.';
            cursor += 1 + len;
        }
    }

    const std::vector<std::uint8_t>& bytes_;
};

/// Minimal A-question encoder for driving the emulator from tests.
inline std::vector<std::uint8_t> make_dns_query(std::uint16_t id, const std::string& name,
                                                std::uint16_t qtype = 1) {
    std::vector<std::uint8_t> q;
    auto u16 = [&](std::uint16_t v) {
        q.push_back(static_cast<std::uint8_t>(v >> 8));
        q.push_back(static_cast<std::uint8_t>(v & 0xff));
    };
    u16(id);
    u16(0x0100); // RD
    u16(1);
    u16(0);
    u16(0);
    u16(0);
    std::size_t start = 0;
    while (start <= name.size()) {
        std::size_t dot = name.find('.', start);
        if (dot == std::string::npos)
            dot = name.size();
        std::size_t len = dot - start;
        if (len > 0) {
            q.push_back(static_cast<std::uint8_t>(len));
            q.insert(q.end(), name.begin() + static_cast<long>(start),
                     name.begin() + static_cast<long>(dot));
        }
        if (dot >= name.size())
            break;
        start = dot + 1;
    }
    q.push_back(0);
    u16(qtype);
    u16(1); // IN
    return q;
}

} // namespace testsupport
