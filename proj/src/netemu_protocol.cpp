// SPDX-License-Identifier: Apache-2.0
//
// Wire-level answer builders for the emulated services. Kept free of socket
// code so they can be checked against independent protocol dissectors.

#include "samosa/config.hpp"
#include "samosa/errors.hpp"
#include "samosa/netemu.hpp"

#include <array>
#include <sstream>

namespace samosa::netemu {

namespace {

constexpr std::uint32_t kDnsTtlSeconds = 60;

std::array<std::uint8_t, 4> ipv4_octets(const std::string& ip) {
    if (!config::is_valid_ipv4(ip))
        throw SchemaError("invalid IPv4 address: '" + ip + "'");
    std::array<std::uint8_t, 4> out{};
    size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        size_t dot = ip.find('.', pos);
        out[static_cast<size_t>(i)] =
            static_cast<std::uint8_t>(std::stoi(ip.substr(pos, dot - pos)));
        pos = dot + 1;
    }
    return out;
}

std::uint16_t read_u16(const std::vector<std::uint8_t>& b, size_t off) {
    return static_cast<std::uint16_t>((b[off] << 8) | b[off + 1]);
}

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 24));
    b.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    b.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    b.push_back(static_cast<std::uint8_t>(v & 0xff));
}

} // namespace

std::vector<std::uint8_t> dns_answer(const std::vector<std::uint8_t>& query,
                                     const std::string& answer_ip) {
    if (query.size() < 12)
        throw MalformedQuery("DNS query shorter than header (" +
                             std::to_string(query.size()) + " bytes)");

    const std::uint16_t id = read_u16(query, 0);
    const std::uint16_t flags = read_u16(query, 2);
    if (flags & 0x8000)
        throw MalformedQuery("QR bit set: not a query");
    const std::uint16_t qdcount = read_u16(query, 4);
    if (qdcount != 1)
        throw MalformedQuery("expected exactly one question, got " +
                             std::to_string(qdcount));

    // Walk the question name; compression pointers are not legal here.
    size_t pos = 12;
    while (true) {
        if (pos >= query.size())
            throw MalformedQuery("truncated question name");
        std::uint8_t len = query[pos];
        if (len == 0) {
            ++pos;
            break;
        }
        if (len > 63)
            throw MalformedQuery("bad label length");
        pos += 1 + len;
        if (pos > query.size())
            throw MalformedQuery("label overruns query");
    }
    if (pos + 4 > query.size())
        throw MalformedQuery("truncated QTYPE/QCLASS");
    const size_t question_end = pos + 4;

    const std::uint16_t opcode = static_cast<std::uint16_t>((flags >> 11) & 0xf);
    const bool rd = (flags & 0x0100) != 0;

    std::vector<std::uint8_t> resp;
    resp.reserve(question_end + 16);
    put_u16(resp, id);
    // QR=1, AA=1, RA=1, RCODE=0; opcode and RD echoed.
    std::uint16_t rflags = 0x8480;
    rflags = static_cast<std::uint16_t>(rflags | (opcode << 11));
    if (rd)
        rflags |= 0x0100;
    put_u16(resp, rflags);
    put_u16(resp, 1); // QDCOUNT
    put_u16(resp, 1); // ANCOUNT
    put_u16(resp, 0); // NSCOUNT
    put_u16(resp, 0); // ARCOUNT
    resp.insert(resp.end(), query.begin() + 12, query.begin() + static_cast<long>(question_end));

    // Answer: pointer to the question name at offset 12.
    put_u16(resp, 0xc00c);
    put_u16(resp, 1); // TYPE A
    put_u16(resp, 1); // CLASS IN
    put_u32(resp, kDnsTtlSeconds);
    put_u16(resp, 4);
    auto ip = ipv4_octets(answer_ip);
    resp.insert(resp.end(), ip.begin(), ip.end());
    return resp;
}

const std::string& fake_html_page() {
    static const std::string page =
        "<!DOCTYPE html>\n"
        "<html><head><title>It works</title></head>\n"
        "<body><h1>It works</h1>\n"
        "<p>Default page served for all requests.</p></body></html>\n";
    return page;
}

HttpAnswer http_answer(const std::string& request_head) {
    HttpAnswer out;

    std::istringstream in(request_head);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            break; // end of headers
        out.lines.push_back(line);
    }
    if (out.lines.empty())
        throw MalformedRequest("empty request");

    // Request line must be METHOD SP TARGET SP HTTP/x.y
    const std::string& rl = out.lines.front();
    size_t sp1 = rl.find(' ');
    size_t sp2 = rl.rfind(' ');
    if (sp1 == std::string::npos || sp2 == sp1 ||
        rl.compare(sp2 + 1, 5, "HTTP/") != 0 || sp1 == 0)
        throw MalformedRequest("unparseable request line: '" + rl + "'");

    const std::string& body = fake_html_page();
    std::ostringstream resp;
    resp << "HTTP/1.1 200 OK\r\n"
         << "Server: samosa-netemu\r\n"
         << "Content-Type: text/html\r\n"
         << "Content-Length: " << body.size() << "\r\n"
         << "Connection: close\r\n"
         << "\r\n"
         << body;
    out.response = resp.str();
    return out;
}

NatPlan plan_nat(const std::string& bridge, const std::string& guest_subnet) {
    if (!config::is_valid_ifname(bridge))
        throw SchemaError("invalid bridge interface name: '" + bridge + "'");
    if (!config::is_valid_cidr(guest_subnet))
        throw SchemaError("invalid guest subnet CIDR: '" + guest_subnet + "'");

    NatPlan plan;
    plan.bridge = bridge;
    const std::string masq =
        "-t nat POSTROUTING -s " + guest_subnet + " ! -o " + bridge + " -j MASQUERADE";
    const std::string fwd_in = "FORWARD -i " + bridge + " -s " + guest_subnet + " -j ACCEPT";
    const std::string fwd_out = "FORWARD -o " + bridge + " -d " + guest_subnet +
                                " -m state --state ESTABLISHED,RELATED -j ACCEPT";

    auto rule = [](const std::string& text, char op) {
        // The chain name follows "-t nat " when a table is named.
        size_t at = text.rfind("-t nat ", 0) == 0 ? 7 : 0;
        return "iptables " + text.substr(0, at) + "-" + op + " " + text.substr(at);
    };

    plan.setup_cmds = {"sysctl -w net.ipv4.ip_forward=1", rule(masq, 'A'),
                       rule(fwd_in, 'A'), rule(fwd_out, 'A')};
    plan.teardown_cmds = {rule(fwd_out, 'D'), rule(fwd_in, 'D'), rule(masq, 'D'),
                          "sysctl -w net.ipv4.ip_forward=0"};
    return plan;
}

} // namespace samosa::netemu
