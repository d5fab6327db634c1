// SPDX-License-Identifier: Apache-2.0
#include "samosa/collectors.hpp"

#include "samosa/errors.hpp"

#include <sstream>

namespace samosa::collectors {

void SyscallCapture::start(vm::Driver& driver, vm::VmHandle& handle,
                           const std::string& ram_dir) {
    if (started_)
        throw Error("syscall capture already started (single capture per run)");

    auto probe = driver.exec_guest(handle, "command -v sysdig", 15);
    if (probe.exit_code != 0)
        throw GuestToolMissing(
            "sysdig is not installed in the guest image; install the sysdig "
            "package (or build it from source for PPC64LE) and rebuild the image");

    driver.exec_guest(handle, "mkdir -p " + ram_dir, 15);
    scap_path_ = ram_dir + "/syscalls.scap";
    text_path_ = ram_dir + "/syscalls.txt";
    job_ = driver.exec_guest_background(handle, "sysdig -w " + scap_path_);
    started_ = true;
}

void SyscallCapture::stop(vm::Driver& driver, vm::VmHandle& handle) {
    if (!started_ || stopped_)
        return;
    driver.halt_job(handle, job_);
    // Convert to the text form in-guest; downstream analysis consumes it.
    driver.exec_guest(handle, "sysdig -r " + scap_path_ + " -t a > " + text_path_, 120);
    stopped_ = true;
}

std::vector<std::string> hpc_argv(pid_t emulator_pid, const std::vector<std::string>& events,
                                  std::uint32_t interval_ms,
                                  const std::filesystem::path& output) {
    std::ostringstream joined;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (i)
            joined << ",";
        joined << events[i];
    }
    return {"perf", "stat",
            "-I", std::to_string(interval_ms),
            "-x", ",",
            "-e", joined.str(),
            "-p", std::to_string(emulator_pid),
            "-o", output.string()};
}

std::vector<std::string> pcap_argv(const std::string& tap,
                                   const std::filesystem::path& output) {
    return {"tcpdump", "-i", tap, "-w", output.string(), "-U", "-n"};
}

HostCapture start_hpc(vm::Driver& driver, pid_t emulator_pid,
                      const std::vector<std::string>& events, std::uint32_t interval_ms,
                      const std::filesystem::path& output) {
    if (events.empty())
        throw SpawnError("HPC capture requires a nonempty event list");
    HostCapture cap;
    cap.output = output;
    cap.job = driver.start_host_capture(vm::HostCaptureKind::HPC,
                                        hpc_argv(emulator_pid, events, interval_ms, output),
                                        output);
    return cap;
}

HostCapture start_pcap(vm::Driver& driver, const std::string& tap,
                       const std::filesystem::path& output) {
    HostCapture cap;
    cap.output = output;
    cap.job = driver.start_host_capture(vm::HostCaptureKind::PCAP, pcap_argv(tap, output),
                                        output);
    return cap;
}

void stop_host_capture(vm::Driver& driver, HostCapture& capture) {
    if (capture.job == 0)
        return;
    driver.stop_host_capture(capture.job);
    capture.job = 0;
}

} // namespace samosa::collectors
