// SPDX-License-Identifier: Apache-2.0
//
// Classic libpcap reader: global header, record headers, Ethernet/IPv4
// decode for the 5-tuple. Deliberately self-contained; acceptance checks it
// against an independent reference reader over a pcap corpus.

#include "samosa/collectors.hpp"
#include "samosa/errors.hpp"

#include <cstdio>

namespace samosa::collectors {

namespace {

constexpr std::uint32_t kMagicMicros = 0xa1b2c3d4;
constexpr std::uint32_t kMagicMicrosSwapped = 0xd4c3b2a1;
constexpr std::uint32_t kMagicNanos = 0xa1b23c4d;
constexpr std::uint32_t kMagicNanosSwapped = 0x4d3cb2a1;
constexpr std::uint32_t kLinkEthernet = 1;
// Guards against absurd record lengths in corrupt files.
constexpr std::uint32_t kMaxFrameBytes = 256 * 1024 * 1024;

struct Cursor {
    const std::uint8_t* p;
    std::size_t size;
    std::size_t pos = 0;
    bool swapped = false;

    std::size_t remaining() const { return size - pos; }

    std::uint32_t u32() {
        std::uint32_t v;
        if (swapped)
            v = (std::uint32_t(p[pos]) << 24) | (std::uint32_t(p[pos + 1]) << 16) |
                (std::uint32_t(p[pos + 2]) << 8) | std::uint32_t(p[pos + 3]);
        else
            v = std::uint32_t(p[pos]) | (std::uint32_t(p[pos + 1]) << 8) |
                (std::uint32_t(p[pos + 2]) << 16) | (std::uint32_t(p[pos + 3]) << 24);
        pos += 4;
        return v;
    }

    void skip(std::size_t n) { pos += n; }
};

std::uint16_t net16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::string ip_string(const std::uint8_t* p) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", p[0], p[1], p[2], p[3]);
    return buf;
}

// Fills IPs/ports/protocol from one captured Ethernet frame. Frames that do
// not decode as IPv4 stay protocol=OTHER with only the wire length set.
void decode_frame(const std::uint8_t* frame, std::size_t len, PacketRecord& rec) {
    if (len < 14)
        return;
    std::size_t off = 12;
    std::uint16_t ethertype = net16(frame + off);
    off += 2;
    // One VLAN tag is common on mirrored taps.
    if (ethertype == 0x8100 && len >= off + 4) {
        ethertype = net16(frame + off + 2);
        off += 4;
    }
    if (ethertype != 0x0800)
        return; // IPv6 and friends are protocol=OTHER in v1

    if (len < off + 20)
        return;
    const std::uint8_t* ip = frame + off;
    if ((ip[0] >> 4) != 4)
        return;
    const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0f) * 4;
    if (ihl < 20 || len < off + ihl)
        return;

    rec.src_ip = ip_string(ip + 12);
    rec.dst_ip = ip_string(ip + 16);
    const std::uint8_t proto = ip[9];
    if (proto == 6)
        rec.protocol = IpProtocol::TCP;
    else if (proto == 17)
        rec.protocol = IpProtocol::UDP;
    else
        rec.protocol = IpProtocol::OTHER;

    if (rec.protocol != IpProtocol::OTHER && len >= off + ihl + 4) {
        const std::uint8_t* l4 = frame + off + ihl;
        rec.src_port = net16(l4);
        rec.dst_port = net16(l4 + 2);
    }
}

} // namespace

PcapParse parse_pcap(const std::vector<std::uint8_t>& bytes, const std::string& guest_ip) {
    if (bytes.size() < 4)
        throw TruncatedFile("input shorter than a pcap magic number");

    Cursor cur{bytes.data(), bytes.size()};
    const std::uint32_t magic = cur.u32();
    bool nanos = false;
    switch (magic) {
    case kMagicMicros: break;
    case kMagicNanos: nanos = true; break;
    case kMagicMicrosSwapped: cur.swapped = true; break;
    case kMagicNanosSwapped:
        cur.swapped = true;
        nanos = true;
        break;
    default: {
        char hex[16];
        std::snprintf(hex, sizeof(hex), "0x%08x", magic);
        throw BadMagic(std::string("not a pcap file (magic ") + hex + ")");
    }
    }

    if (bytes.size() < 24)
        throw TruncatedFile("pcap global header truncated");
    cur.skip(2 + 2 + 4 + 4); // version, thiszone, sigfigs
    cur.skip(4);             // snaplen
    const std::uint32_t linktype = cur.u32();
    if (linktype != kLinkEthernet)
        throw BadMagic("unsupported pcap link type " + std::to_string(linktype) +
                       " (expected Ethernet)");

    PcapParse out;
    while (cur.remaining() > 0) {
        if (cur.remaining() < 16) {
            out.truncated_tail = true;
            break;
        }
        const std::uint32_t ts_sec = cur.u32();
        const std::uint32_t ts_frac = cur.u32();
        const std::uint32_t incl_len = cur.u32();
        const std::uint32_t orig_len = cur.u32();
        if (incl_len > kMaxFrameBytes || cur.remaining() < incl_len) {
            out.truncated_tail = true;
            break;
        }

        PacketRecord rec;
        rec.host_ts_ns = static_cast<std::int64_t>(ts_sec) * 1000000000LL +
                         (nanos ? static_cast<std::int64_t>(ts_frac)
                                : static_cast<std::int64_t>(ts_frac) * 1000LL);
        rec.wire_len_bytes = orig_len;
        decode_frame(cur.p + cur.pos, incl_len, rec);
        cur.skip(incl_len);

        if (rec.src_ip == guest_ip)
            rec.direction = PacketDirection::TX;
        else if (rec.dst_ip == guest_ip)
            rec.direction = PacketDirection::RX;
        else
            rec.direction = PacketDirection::OTHER;

        out.packets.push_back(std::move(rec));
    }
    return out;
}

} // namespace samosa::collectors
