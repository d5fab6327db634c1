// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace samosa::netemu {

enum class Protocol { DNS_UDP, HTTP_TCP, RAW_TCP };

struct ListenerConfig {
    std::string name;   // e.g. "HTTPListener80"
    Protocol protocol = Protocol::HTTP_TCP;
    std::uint16_t port = 0; // 0 binds an ephemeral port
    std::string bind_ip = "127.0.0.1";
};

/// One intercepted request: every line the client sent, verbatim.
struct AccessLogEntry {
    std::int64_t ts_ns = 0;
    std::string listener;
    std::string client; // "ip:port"
    std::vector<std::string> lines;
};

/// Host command plans for the NAT passthrough mode. Commands are returned,
/// never executed here; the pipeline's host-command runner executes them so
/// tests can record instead.
struct NatPlan {
    std::vector<std::string> setup_cmds;
    std::vector<std::string> teardown_cmds;
    std::string bridge;
};

struct HttpAnswer {
    std::string response;            // full HTTP/1.1 response text
    std::vector<std::string> lines;  // request line + header lines, verbatim
};

/// Build a positive DNS response for one A-type question: QR=1, RCODE=0,
/// one A answer carrying answer_ip, TTL 60, ID echoed. Throws MalformedQuery
/// for undecodable input.
std::vector<std::uint8_t> dns_answer(const std::vector<std::uint8_t>& query,
                                     const std::string& answer_ip);

/// Answer any HTTP/1.1 request with status 200 and the same fake HTML page
/// regardless of path or method. Throws MalformedRequest when the request
/// line is unparseable.
HttpAnswer http_answer(const std::string& request_head);

/// The page served for every URL.
const std::string& fake_html_page();

/// Internet-services emulator: a set of concurrent listeners answering all
/// sandbox-originated traffic with positive replies and logging every
/// intercepted request. Never initiates outbound connections.
class Emulator {
public:
    explicit Emulator(std::vector<ListenerConfig> listeners,
                      std::string dns_answer_ip = "10.0.2.2");
    ~Emulator();
    Emulator(const Emulator&) = delete;
    Emulator& operator=(const Emulator&) = delete;

    void stop();
    bool stopped() const { return stopped_; }
    std::size_t listener_count() const { return listeners_.size(); }
    /// Actual bound port (resolves ephemeral binds).
    std::uint16_t bound_port(const std::string& name) const;

    std::vector<AccessLogEntry> access_log() const;

    /// Core HTTP handling shared by the socket path and direct callers:
    /// logs the request lines, then returns the positive response.
    /// MalformedRequest propagates after the raw lines are logged.
    std::string answer_http(const std::string& listener_name,
                            const std::string& request_head,
                            const std::string& client = "local");

    void append_log(const std::string& listener_name, const std::string& client,
                    std::vector<std::string> lines);

private:
    struct Listener;
    void serve(Listener& l);
    void serve_dns(Listener& l);
    void serve_tcp(Listener& l);

    std::vector<std::unique_ptr<Listener>> listeners_;
    std::string dns_ip_;
    mutable std::mutex log_mutex_;
    std::vector<AccessLogEntry> log_;
    std::map<std::string, std::int64_t> last_ts_; // per-listener monotonic clamp
    bool stopped_ = false;
};

using EmulatorHandle = std::unique_ptr<Emulator>;

/// Bind and start all listeners. Throws BindError(port) when a port is
/// unavailable (already-bound listeners are released).
EmulatorHandle start_emulator(std::vector<ListenerConfig> listeners,
                              std::string dns_answer_ip = "10.0.2.2");

/// The default listener set: DNS on 53/udp, HTTP on 80, HTTPS answered as a
/// raw positive responder on 443, and a raw TCP catch-all.
std::vector<ListenerConfig> default_listeners(const std::string& bind_ip,
                                              bool ephemeral_ports = false);

struct ReportPaths {
    std::filesystem::path report_path;
    std::filesystem::path log_path;
};

/// Write fakenet.log (one "[<listener>] <line>" per line) and the HTML
/// report with per-listener request counts and distinct clients.
/// Requires a stopped handle.
ReportPaths write_report(const Emulator& handle, const std::filesystem::path& dir);

/// Generate the iptables/sysctl plan that gives the sandbox bridge real
/// internet access. teardown_cmds reverse setup_cmds exactly.
NatPlan plan_nat(const std::string& bridge, const std::string& guest_subnet);

} // namespace samosa::netemu
