// SPDX-License-Identifier: Apache-2.0
#include "samosa/scenario.hpp"

#include "samosa/clock.hpp"
#include "samosa/errors.hpp"

#include <algorithm>
#include <fstream>

namespace samosa::vm {

namespace {

// Pulls the redirect targets out of "cmd > out 2> err" style commands.
std::string redirect_target(const std::string& command, const std::string& marker) {
    size_t pos = command.rfind(marker);
    if (pos == std::string::npos)
        return "";
    pos += marker.size();
    while (pos < command.size() && command[pos] == ' ')
        ++pos;
    size_t end = command.find(' ', pos);
    return command.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

std::string parent_dir(const std::string& path) {
    size_t slash = path.rfind('/');
    if (slash == std::string::npos || slash == 0)
        return "/";
    return path.substr(0, slash);
}

} // namespace

MockDriver::MockDriver(ScenarioScript scenario) : scenario_(std::move(scenario)) {
    // Every pipeline-issued command must match at least the catch-all.
    bool has_catch_all = false;
    for (const auto& r : scenario_.responses)
        if (r.pattern.empty())
            has_catch_all = true;
    if (!has_catch_all)
        scenario_.responses.push_back({"", 0, "", "", 0});
    guest_fs_ = scenario_.guest_files;
    guest_dirs_ = scenario_.guest_dirs;
}

MockDriver::~MockDriver() = default;

std::unique_ptr<MockDriver> make_mock_driver(ScenarioScript scenario) {
    return std::make_unique<MockDriver>(std::move(scenario));
}

const ScriptedResponse* MockDriver::match_response(const std::string& command) const {
    for (const auto& r : scenario_.responses)
        if (!r.pattern.empty() && command.find(r.pattern) != std::string::npos)
            return &r;
    return nullptr;
}

void MockDriver::require_booted() const {
    if (!booted_ || !emulator_running_)
        throw SshError("mock guest is not booted");
}

bool MockDriver::guest_dir_exists(const std::string& path) const {
    if (path == "/")
        return true;
    for (const auto& d : guest_dirs_) {
        if (path == d)
            return true;
        if (path.size() > d.size() && path.compare(0, d.size(), d) == 0 &&
            path[d.size()] == '/')
            return true;
    }
    return false;
}

VmHandle MockDriver::boot(const BootCommand& cmd, const config::VmProfile& profile,
                          int timeout_s) {
    (void)timeout_s;
    sleep_ms(scenario_.boot_delay_ms);
    if (scenario_.fail_boot) {
        emulator_terminated_ = true;
        throw BootTimeout("scripted boot failure: guest SSH never came up");
    }
    booted_ = true;
    emulator_running_ = true;
    boot_cmd_ = cmd;

    // The serial log and the trace output start existing at boot.
    const auto run_dir = cmd.trace_output.parent_path();
    std::error_code ec;
    std::filesystem::create_directories(run_dir, ec);
    {
        std::ofstream vmlog(run_dir / "vm.log", std::ios::binary);
        vmlog << scenario_.vm_log_text;
    }
    std::ofstream trace(cmd.trace_output, std::ios::binary); // being written

    VmHandle h;
    h.backend = BackendKind::MOCK;
    h.guest_ip = profile.guest_ip;
    h.ssh_port = profile.ssh_port;
    h.snapshot_path = run_dir / "snapshot.img";
    h.boot_ts_ns = wall_clock_ns();
    return h;
}

void MockDriver::copy_in(VmHandle&, const std::filesystem::path& local,
                         const std::string& guest_path, bool executable) {
    require_booted();
    std::ifstream in(local, std::ios::binary);
    if (!in)
        throw TransferError("cannot read local file: " + local.string());
    if (!guest_dir_exists(parent_dir(guest_path)))
        throw GuestPathError("no such guest directory: " + parent_dir(guest_path));
    std::ostringstream buf;
    buf << in.rdbuf();
    guest_fs_[guest_path] = buf.str();
    if (executable)
        guest_fs_[guest_path + ".mode"] = "0755";
    exec_log_.push_back("copy_in " + guest_path);
}

void MockDriver::copy_out(VmHandle&, const std::string& guest_path,
                          const std::filesystem::path& local) {
    require_booted();
    auto it = guest_fs_.find(guest_path);
    if (it == guest_fs_.end())
        throw GuestPathError("no such guest file: " + guest_path);
    std::ofstream out(local, std::ios::binary);
    if (!out)
        throw TransferError("cannot write local file: " + local.string());
    out << it->second;
    exec_log_.push_back("copy_out " + guest_path);
}

void MockDriver::apply_redirects(const std::string& command, const std::string& out,
                                 const std::string& err) {
    const std::string out_path = redirect_target(command, " > ");
    const std::string err_path = redirect_target(command, " 2> ");
    if (!out_path.empty())
        guest_fs_[out_path] = out;
    if (!err_path.empty())
        guest_fs_[err_path] = err;
}

GuestExecResult MockDriver::exec_guest(VmHandle&, const std::string& command,
                                       int timeout_s) {
    require_booted();
    exec_log_.push_back(command);

    GuestExecResult res;
    res.started_ts_ns = wall_clock_ns();

    const ScriptedResponse* scripted = match_response(command);
    if (scripted) {
        if (timeout_s > 0 && scripted->duration_ms > static_cast<std::int64_t>(timeout_s) * 1000) {
            sleep_ms(static_cast<std::int64_t>(timeout_s) * 1000);
            throw ExecTimeout("guest command exceeded " + std::to_string(timeout_s) +
                              "s: " + command);
        }
        sleep_ms(scripted->duration_ms);
        res.exit_code = scripted->exit_code;
        res.stdout_bytes = scripted->stdout_text;
        res.stderr_bytes = scripted->stderr_text;
        apply_redirects(command, res.stdout_bytes, res.stderr_bytes);
        res.ended_ts_ns = wall_clock_ns();
        return res;
    }

    // Built-in guest semantics the pipeline relies on.
    if (command.rfind("mkdir -p ", 0) == 0) {
        std::string dir = command.substr(9);
        if (auto sp = dir.find(' '); sp != std::string::npos)
            dir = dir.substr(0, sp);
        guest_dirs_.push_back(dir);
        res.exit_code = 0;
        res.ended_ts_ns = wall_clock_ns();
        return res;
    }
    if (command.find("sysdig -r ") != std::string::npos) {
        // Converting the binary capture to text: honor the "> file" target.
        const std::string target = redirect_target(command, " > ");
        std::string text;
        if (scenario_.traces.syscall_text) {
            text = *scenario_.traces.syscall_text;
        } else if (exec_anchor_ns_) {
            text = render_syscall_text(scenario_.traces.syscalls, *exec_anchor_ns_,
                                       scenario_.clock_skew_ns);
        }
        if (!target.empty())
            guest_fs_[target] = text;
        res.exit_code = 0;
        res.ended_ts_ns = wall_clock_ns();
        return res;
    }

    const ScriptedResponse* fallback = nullptr;
    for (const auto& r : scenario_.responses)
        if (r.pattern.empty())
            fallback = &r;
    res.exit_code = fallback ? fallback->exit_code : 0;
    res.stdout_bytes = fallback ? fallback->stdout_text : "";
    res.stderr_bytes = fallback ? fallback->stderr_text : "";
    apply_redirects(command, res.stdout_bytes, res.stderr_bytes);
    res.ended_ts_ns = wall_clock_ns();
    return res;
}

GuestJobId MockDriver::exec_guest_background(VmHandle&, const std::string& command) {
    require_booted();
    exec_log_.push_back("(bg) " + command);

    GuestJob job;
    job.command = command;
    job.started_ns = wall_clock_ns();
    const bool is_capture = command.find("sysdig -w") != std::string::npos;
    if (is_capture) {
        job.duration_ms = 0; // capture runs until stopped
    } else {
        job.duration_ms = scenario_.background_job_duration_ms;
        if (!exec_anchor_ns_)
            exec_anchor_ns_ = job.started_ns;
    }
    GuestJobId id = next_job_id_++;
    guest_jobs_[id] = std::move(job);
    return id;
}

void MockDriver::finish_guest_job(GuestJob& job) {
    if (job.finalized)
        return;
    job.finalized = true;

    if (job.command.find("sysdig -w") != std::string::npos) {
        // The native binary capture appears where sysdig was told to write.
        const std::string marker = "sysdig -w ";
        size_t pos = job.command.find(marker) + marker.size();
        size_t end = job.command.find(' ', pos);
        const std::string scap_path =
            job.command.substr(pos, end == std::string::npos ? std::string::npos
                                                             : end - pos);
        std::string text;
        if (scenario_.traces.syscall_text)
            text = *scenario_.traces.syscall_text;
        else if (exec_anchor_ns_)
            text = render_syscall_text(scenario_.traces.syscalls, *exec_anchor_ns_,
                                       scenario_.clock_skew_ns);
        guest_fs_[scap_path] = "SCAP1\x00" + text;
    } else {
        const ScriptedResponse* scripted = match_response(job.command);
        std::string out = scripted ? scripted->stdout_text : "";
        std::string err = scripted ? scripted->stderr_text : "";
        apply_redirects(job.command, out, err);
    }
}

bool MockDriver::guest_job_running(VmHandle&, GuestJobId job) {
    require_booted();
    auto it = guest_jobs_.find(job);
    if (it == guest_jobs_.end())
        return false;
    GuestJob& j = it->second;
    if (j.halted)
        return false;
    if (j.duration_ms > 0 &&
        wall_clock_ns() >= j.started_ns + j.duration_ms * 1000000LL) {
        finish_guest_job(j);
        return false;
    }
    return true;
}

void MockDriver::halt_job(VmHandle&, GuestJobId job) {
    require_booted();
    auto it = guest_jobs_.find(job);
    if (it == guest_jobs_.end())
        throw SshError("no such guest job: " + std::to_string(job));
    it->second.halted = true;
    finish_guest_job(it->second);
}

ClockSample MockDriver::sample_guest_clock(VmHandle&) {
    require_booted();
    ClockSample s;
    s.host_ns_before = wall_clock_ns();
    // A short scripted SSH round trip keeps the bracket width honest.
    std::this_thread::sleep_for(std::chrono::microseconds(200));
    s.guest_ns = wall_clock_ns() + scenario_.clock_skew_ns;
    std::this_thread::sleep_for(std::chrono::microseconds(200));
    s.host_ns_after = wall_clock_ns();
    return s;
}

void MockDriver::write_disk_trace() {
    if (boot_cmd_.trace_output.empty())
        return;
    std::string text;
    if (scenario_.traces.disk_trace_lines)
        text = *scenario_.traces.disk_trace_lines;
    else if (exec_anchor_ns_) {
        const bool nvme =
            boot_cmd_.tokens.end() !=
            std::find_if(boot_cmd_.tokens.begin(), boot_cmd_.tokens.end(),
                         [](const std::string& t) { return t.rfind("nvme,", 0) == 0; });
        text = render_disk_trace(scenario_.traces.disk, *exec_anchor_ns_,
                                 nvme ? config::DiskDevice::NVME
                                      : config::DiskDevice::VIRTIO_BLK);
    }
    std::ofstream out(boot_cmd_.trace_output, std::ios::binary);
    out << text;
}

void MockDriver::shutdown(VmHandle&, int grace_s) {
    if (!booted_)
        return;
    for (auto& [id, job] : guest_jobs_) {
        job.halted = true;
        finish_guest_job(job);
    }
    write_disk_trace();
    {
        std::ofstream vmlog(boot_cmd_.trace_output.parent_path() / "vm.log",
                            std::ios::binary | std::ios::app);
        vmlog << "reboot: Power down\n";
    }
    if (scenario_.hang_on_shutdown) {
        sleep_ms(std::min<std::int64_t>(static_cast<std::int64_t>(grace_s) * 1000, 50));
        emulator_terminated_ = true; // forced kill after grace
    }
    emulator_running_ = false;
    booted_ = false;
}

HostJobId MockDriver::start_host_capture(HostCaptureKind kind,
                                         const std::vector<std::string>& argv,
                                         const std::filesystem::path& output) {
    (void)argv;
    HostJob job;
    job.kind = kind;
    job.output = output;
    HostJobId id = next_job_id_++;
    host_jobs_[id] = std::move(job);
    return id;
}

void MockDriver::stop_host_capture(HostJobId id) {
    auto it = host_jobs_.find(id);
    if (it == host_jobs_.end())
        throw SpawnError("no such host capture job: " + std::to_string(id));
    HostJob& job = it->second;
    if (!job.running)
        return;
    job.running = false;

    std::error_code ec;
    std::filesystem::create_directories(job.output.parent_path(), ec);
    std::ofstream out(job.output, std::ios::binary);
    if (job.kind == HostCaptureKind::HPC) {
        if (scenario_.traces.hpc_csv)
            out << *scenario_.traces.hpc_csv;
        else
            out << render_hpc_csv(scenario_.traces.hpc);
    } else {
        std::vector<std::uint8_t> bytes;
        if (scenario_.traces.pcap_bytes)
            bytes = *scenario_.traces.pcap_bytes;
        else
            bytes = render_pcap(scenario_.traces.packets,
                                exec_anchor_ns_.value_or(wall_clock_ns()));
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    }
}

std::size_t MockDriver::live_guest_jobs() const {
    std::size_t n = 0;
    const std::int64_t now = wall_clock_ns();
    for (const auto& [id, j] : guest_jobs_)
        if (!j.halted &&
            (j.duration_ms == 0 || now < j.started_ns + j.duration_ms * 1000000LL))
            ++n;
    return n;
}

std::size_t MockDriver::live_host_jobs() const {
    std::size_t n = 0;
    for (const auto& [id, j] : host_jobs_)
        if (j.running)
            ++n;
    return n;
}

std::optional<std::string> MockDriver::guest_file(const std::string& path) const {
    auto it = guest_fs_.find(path);
    if (it == guest_fs_.end())
        return std::nullopt;
    return it->second;
}

} // namespace samosa::vm
