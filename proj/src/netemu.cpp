// SPDX-License-Identifier: Apache-2.0
#include "samosa/netemu.hpp"

#include "samosa/clock.hpp"
#include "samosa/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace samosa::netemu {

namespace {

std::string peer_string(const sockaddr_in& addr) {
    char buf[INET_ADDRSTRLEN] = {0};
    ::inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof(buf));
    return std::string(buf) + ":" + std::to_string(ntohs(addr.sin_port));
}

// Raw-listener payloads may be binary; keep log lines printable.
std::vector<std::string> printable_lines(const std::string& data) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char c : data) {
        if (c == '\n') {
            flush();
        } else if (c == '\r') {
            continue;
        } else if (c >= 0x20 && c < 0x7f) {
            cur += static_cast<char>(c);
        } else {
            char esc[8];
            std::snprintf(esc, sizeof(esc), "\\x%02x", c);
            cur += esc;
        }
    }
    flush();
    if (out.empty())
        out.push_back("(no data)");
    return out;
}

} // namespace

struct Emulator::Listener {
    ListenerConfig cfg;
    int fd = -1;
    std::uint16_t bound_port = 0;
    std::thread thread;
    std::atomic<bool> stop{false};
};

Emulator::Emulator(std::vector<ListenerConfig> listeners, std::string dns_answer_ip)
    : dns_ip_(std::move(dns_answer_ip)) {
    std::set<std::string> names;
    for (const auto& cfg : listeners)
        if (!names.insert(cfg.name).second)
            throw SchemaError("duplicate listener name '" + cfg.name + "'");

    try {
        for (const auto& cfg : listeners) {
            auto l = std::make_unique<Listener>();
            l->cfg = cfg;

            const int type = cfg.protocol == Protocol::DNS_UDP ? SOCK_DGRAM : SOCK_STREAM;
            l->fd = ::socket(AF_INET, type, 0);
            if (l->fd < 0)
                throw BindError(cfg.port, "socket() failed for listener " + cfg.name);
            int one = 1;
            ::setsockopt(l->fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

            sockaddr_in addr{};
            addr.sin_family = AF_INET;
            addr.sin_port = htons(cfg.port);
            if (::inet_pton(AF_INET, cfg.bind_ip.c_str(), &addr.sin_addr) != 1) {
                ::close(l->fd);
                throw BindError(cfg.port, "bad bind address '" + cfg.bind_ip +
                                              "' for listener " + cfg.name);
            }
            if (::bind(l->fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
                int err = errno;
                ::close(l->fd);
                throw BindError(cfg.port, "cannot bind " + cfg.bind_ip + ":" +
                                              std::to_string(cfg.port) + " for " +
                                              cfg.name + ": " + std::strerror(err));
            }
            socklen_t len = sizeof(addr);
            ::getsockname(l->fd, reinterpret_cast<sockaddr*>(&addr), &len);
            l->bound_port = ntohs(addr.sin_port);

            if (type == SOCK_STREAM && ::listen(l->fd, 16) != 0) {
                int err = errno;
                ::close(l->fd);
                throw BindError(cfg.port,
                                "listen() failed for " + cfg.name + ": " + std::strerror(err));
            }
            listeners_.push_back(std::move(l));
        }
        for (auto& l : listeners_)
            l->thread = std::thread([this, lp = l.get()] { serve(*lp); });
    } catch (...) {
        for (auto& l : listeners_) {
            l->stop = true;
            if (l->fd >= 0)
                ::close(l->fd);
            if (l->thread.joinable())
                l->thread.join();
        }
        listeners_.clear();
        throw;
    }
}

Emulator::~Emulator() {
    if (!stopped_)
        stop();
}

void Emulator::stop() {
    if (stopped_)
        return;
    for (auto& l : listeners_) {
        l->stop = true;
        if (l->fd >= 0)
            ::shutdown(l->fd, SHUT_RDWR);
    }
    for (auto& l : listeners_) {
        if (l->thread.joinable())
            l->thread.join();
        if (l->fd >= 0) {
            ::close(l->fd);
            l->fd = -1;
        }
    }
    stopped_ = true;
}

std::uint16_t Emulator::bound_port(const std::string& name) const {
    for (const auto& l : listeners_)
        if (l->cfg.name == name)
            return l->bound_port;
    throw Error("no listener named '" + name + "'");
}

std::vector<AccessLogEntry> Emulator::access_log() const {
    std::lock_guard lock(log_mutex_);
    return log_;
}

void Emulator::append_log(const std::string& listener_name, const std::string& client,
                          std::vector<std::string> lines) {
    if (lines.empty())
        return;
    std::lock_guard lock(log_mutex_);
    AccessLogEntry entry;
    entry.ts_ns = wall_clock_ns();
    auto& last = last_ts_[listener_name];
    if (entry.ts_ns < last)
        entry.ts_ns = last; // keep per-listener timestamps nondecreasing
    last = entry.ts_ns;
    entry.listener = listener_name;
    entry.client = client;
    entry.lines = std::move(lines);
    log_.push_back(std::move(entry));
}

std::string Emulator::answer_http(const std::string& listener_name,
                                  const std::string& request_head,
                                  const std::string& client) {
    try {
        HttpAnswer ans = http_answer(request_head);
        append_log(listener_name, client, ans.lines);
        return ans.response;
    } catch (const MalformedRequest&) {
        append_log(listener_name, client, printable_lines(request_head));
        throw;
    }
}

void Emulator::serve(Listener& l) {
    if (l.cfg.protocol == Protocol::DNS_UDP)
        serve_dns(l);
    else
        serve_tcp(l);
}

void Emulator::serve_dns(Listener& l) {
    std::vector<std::uint8_t> buf(4096);
    while (!l.stop) {
        pollfd p{l.fd, POLLIN, 0};
        int rc = ::poll(&p, 1, 200);
        if (rc <= 0 || !(p.revents & POLLIN))
            continue;
        sockaddr_in peer{};
        socklen_t plen = sizeof(peer);
        ssize_t n = ::recvfrom(l.fd, buf.data(), buf.size(), 0,
                               reinterpret_cast<sockaddr*>(&peer), &plen);
        if (n <= 0)
            continue;
        std::vector<std::uint8_t> query(buf.begin(), buf.begin() + n);
        try {
            auto resp = dns_answer(query, dns_ip_);
            // Log the question name for the report.
            std::string qname;
            size_t pos = 12;
            while (pos < query.size() && query[pos] != 0) {
                std::uint8_t len = query[pos];
                qname.append(reinterpret_cast<const char*>(query.data()) + pos + 1, len);
                qname += '.';
                pos += 1 + len;
            }
            append_log(l.cfg.name, peer_string(peer), {"A? " + qname});
            ::sendto(l.fd, resp.data(), resp.size(), 0,
                     reinterpret_cast<sockaddr*>(&peer), plen);
        } catch (const MalformedQuery&) {
            append_log(l.cfg.name, peer_string(peer),
                       {"(malformed dns query, " + std::to_string(n) + " bytes)"});
        }
    }
}

void Emulator::serve_tcp(Listener& l) {
    while (!l.stop) {
        pollfd p{l.fd, POLLIN, 0};
        int rc = ::poll(&p, 1, 200);
        if (rc <= 0 || !(p.revents & POLLIN))
            continue;
        sockaddr_in peer{};
        socklen_t plen = sizeof(peer);
        int conn = ::accept(l.fd, reinterpret_cast<sockaddr*>(&peer), &plen);
        if (conn < 0)
            continue;

        const std::string client = peer_string(peer);
        std::string data;
        char buf[4096];
        // Collect the request head; raw listeners just take whatever shows
        // up within the window.
        const int window_ms = l.cfg.protocol == Protocol::HTTP_TCP ? 2000 : 500;
        const std::int64_t deadline = wall_clock_ns() + window_ms * 1000000LL;
        while (wall_clock_ns() < deadline && data.size() < 65536) {
            pollfd cp{conn, POLLIN, 0};
            int crc = ::poll(&cp, 1, 50);
            if (l.stop)
                break;
            if (crc <= 0)
                continue;
            ssize_t n = ::recv(conn, buf, sizeof(buf), 0);
            if (n <= 0)
                break;
            data.append(buf, static_cast<size_t>(n));
            if (l.cfg.protocol == Protocol::HTTP_TCP &&
                (data.find("\r\n\r\n") != std::string::npos ||
                 data.find("\n\n") != std::string::npos))
                break;
            if (l.cfg.protocol == Protocol::RAW_TCP && !data.empty())
                break;
        }

        if (l.cfg.protocol == Protocol::HTTP_TCP) {
            try {
                std::string resp = answer_http(l.cfg.name, data, client);
                ::send(conn, resp.data(), resp.size(), MSG_NOSIGNAL);
            } catch (const MalformedRequest&) {
                // logged above; positive policy still closes politely
            }
        } else {
            append_log(l.cfg.name, client, printable_lines(data));
            const std::string& page = fake_html_page();
            std::string resp = "HTTP/1.1 200 OK\r\nContent-Type: text/html\r\nContent-Length: " +
                               std::to_string(page.size()) + "\r\nConnection: close\r\n\r\n" +
                               page;
            ::send(conn, resp.data(), resp.size(), MSG_NOSIGNAL);
        }
        ::shutdown(conn, SHUT_RDWR);
        ::close(conn);
    }
}

EmulatorHandle start_emulator(std::vector<ListenerConfig> listeners,
                              std::string dns_answer_ip) {
    return std::make_unique<Emulator>(std::move(listeners), std::move(dns_answer_ip));
}

std::vector<ListenerConfig> default_listeners(const std::string& bind_ip,
                                              bool ephemeral_ports) {
    auto port = [&](std::uint16_t p) -> std::uint16_t { return ephemeral_ports ? 0 : p; };
    return {
        {"DNSListener53", Protocol::DNS_UDP, port(53), bind_ip},
        {"HTTPListener80", Protocol::HTTP_TCP, port(80), bind_ip},
        {"RawListener443", Protocol::RAW_TCP, port(443), bind_ip},
        {"RawListenerTCP", Protocol::RAW_TCP, port(1337), bind_ip},
    };
}

ReportPaths write_report(const Emulator& handle, const std::filesystem::path& dir) {
    if (!handle.stopped())
        throw Error("write_report requires a stopped emulator");

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    ReportPaths paths;
    paths.log_path = dir / "fakenet.log";
    paths.report_path = dir / "fakenet_report.html";

    const auto entries = handle.access_log();

    {
        std::ofstream log(paths.log_path, std::ios::binary);
        if (!log)
            throw IoError("cannot write " + paths.log_path.string());
        for (const auto& e : entries)
            for (const auto& line : e.lines)
                log << "[" << e.listener << "] " << line << "\n";
        if (!log.flush())
            throw IoError("failed writing " + paths.log_path.string());
    }

    struct Stat {
        std::size_t requests = 0;
        std::set<std::string> clients;
    };
    std::map<std::string, Stat> stats;
    for (const auto& e : entries) {
        auto& s = stats[e.listener];
        s.requests += 1;
        s.clients.insert(e.client);
    }

    std::ofstream html(paths.report_path, std::ios::binary);
    if (!html)
        throw IoError("cannot write " + paths.report_path.string());
    html << "<!DOCTYPE html>\n<html><head><title>Network emulation report</title>"
         << "</head>\n<body>\n<h1>Network emulation report</h1>\n"
         << "<table border=\"1\">\n<tr><th>Listener</th><th>Requests</th>"
         << "<th>Distinct clients</th></tr>\n";
    for (const auto& [name, s] : stats) {
        html << "<tr><td>" << name << "</td><td>" << s.requests << "</td><td>";
        bool first = true;
        for (const auto& c : s.clients) {
            if (!first)
                html << ", ";
            html << c;
            first = false;
        }
        html << "</td></tr>\n";
    }
    if (stats.empty())
        html << "<tr><td colspan=\"3\">no traffic intercepted</td></tr>\n";
    html << "</table>\n<p>Total requests: " << entries.size() << "</p>\n</body></html>\n";
    if (!html.flush())
        throw IoError("failed writing " + paths.report_path.string());

    return paths;
}

} // namespace samosa::netemu
