// SPDX-License-Identifier: Apache-2.0
#include "samosa/vmdriver.hpp"

#include "samosa/errors.hpp"
#include "samosa/subprocess.hpp"

#include <cstdlib>
#include <sstream>

namespace samosa::vm {

namespace {

std::string emulator_executable(config::Architecture arch) {
    switch (arch) {
    case config::Architecture::X86_64: return "qemu-system-x86_64";
    case config::Architecture::ARM64: return "qemu-system-aarch64";
    case config::Architecture::PPC64LE: return "qemu-system-ppc64";
    }
    throw UnsupportedArch("no emulator executable for this architecture");
}

std::string image_format(const std::filesystem::path& image) {
    return image.extension() == ".qcow2" ? "qcow2" : "raw";
}

bool in_path(const std::string& exe) {
    const char* path = std::getenv("PATH");
    if (!path)
        return false;
    std::istringstream in(path);
    std::string dir;
    while (std::getline(in, dir, ':')) {
        if (dir.empty())
            continue;
        std::error_code ec;
        if (std::filesystem::exists(std::filesystem::path(dir) / exe, ec))
            return true;
    }
    return false;
}

} // namespace

BootCommand build_boot_command(const config::VmProfile& profile, const std::string& run_id,
                               const std::filesystem::path& snapshot,
                               const std::string& tap) {
    BootCommand cmd;
    cmd.tap = tap;
    const std::filesystem::path run_dir = snapshot.parent_path();
    cmd.trace_output = run_dir / "disk.trace";

    auto& t = cmd.tokens;
    t.push_back(emulator_executable(profile.arch));
    t.push_back("-name");
    t.push_back("samosa-" + run_id);
    t.push_back("-machine");
    t.push_back(profile.machine_type);
    if (profile.kvm)
        t.push_back("-enable-kvm");
    t.push_back("-cpu");
    t.push_back(profile.cpu_model);
    t.push_back("-m");
    t.push_back(std::to_string(profile.ram_mb));
    t.push_back("-smp");
    t.push_back(std::to_string(profile.cores));
    t.push_back("-display");
    t.push_back("none");
    t.push_back("-serial");
    t.push_back("file:" + (run_dir / "vm.log").string());
    t.push_back("-monitor");
    t.push_back("none");

    t.push_back("-drive");
    t.push_back("file=" + snapshot.string() + ",if=none,id=drive0,format=" +
                image_format(snapshot));
    t.push_back("-device");
    if (profile.disk_device == config::DiskDevice::NVME)
        t.push_back("nvme,drive=drive0,serial=samosa-" + run_id);
    else
        t.push_back("virtio-blk-pci,drive=drive0");

    t.push_back("-netdev");
    t.push_back("tap,id=net0,ifname=" + tap + ",script=no,downscript=no");
    t.push_back("-device");
    t.push_back("virtio-net-pci,netdev=net0");

    const char* read_event = profile.disk_device == config::DiskDevice::NVME
                                 ? "pci_nvme_read"
                                 : "virtio_blk_handle_read";
    const char* write_event = profile.disk_device == config::DiskDevice::NVME
                                  ? "pci_nvme_write"
                                  : "virtio_blk_handle_write";
    t.push_back("-trace");
    t.push_back(std::string("enable=") + read_event + ",file=" + cmd.trace_output.string());
    t.push_back("-trace");
    t.push_back(std::string("enable=") + write_event);

    return cmd;
}

std::filesystem::path clone_snapshot(const config::VmProfile& profile,
                                     const std::filesystem::path& run_dir) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(profile.base_image, ec))
        throw MissingBaseImage("base image not found: " + profile.base_image.string());

    std::filesystem::create_directories(run_dir, ec);
    const std::filesystem::path dst = run_dir / "snapshot.img";

    if (image_format(profile.base_image) == "qcow2" && in_path("qemu-img")) {
        const auto base_abs = std::filesystem::absolute(profile.base_image);
        auto res = proc::run_command({"qemu-img", "create", "-f", "qcow2", "-b",
                                      base_abs.string(), "-F", "qcow2", dst.string()},
                                     60);
        if (res.exit_code != 0)
            throw IoError("qemu-img overlay creation failed: " + res.err);
        return dst;
    }

    if (!std::filesystem::copy_file(profile.base_image, dst,
                                    std::filesystem::copy_options::overwrite_existing, ec) ||
        ec)
        throw IoError("snapshot copy failed: " + ec.message());
    return dst;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += "'";
    return out;
}

namespace {

std::vector<std::string> ssh_base(const config::VmProfile& profile) {
    return {"ssh",
            "-o", "BatchMode=yes",
            "-o", "StrictHostKeyChecking=no",
            "-o", "UserKnownHostsFile=/dev/null",
            "-o", "LogLevel=ERROR",
            "-o", "ConnectTimeout=5",
            "-p", std::to_string(profile.ssh_port),
            profile.ssh_user + "@" + profile.guest_ip};
}

std::vector<std::string> scp_base(const config::VmProfile& profile) {
    return {"scp",
            "-o", "BatchMode=yes",
            "-o", "StrictHostKeyChecking=no",
            "-o", "UserKnownHostsFile=/dev/null",
            "-o", "LogLevel=ERROR",
            "-P", std::to_string(profile.ssh_port)};
}

} // namespace

std::vector<std::string> ssh_argv(const config::VmProfile& profile,
                                  const std::string& remote_command) {
    auto argv = ssh_base(profile);
    argv.push_back(remote_command);
    return argv;
}

std::vector<std::string> scp_to_guest_argv(const config::VmProfile& profile,
                                           const std::filesystem::path& local,
                                           const std::string& guest_path) {
    auto argv = scp_base(profile);
    argv.push_back(local.string());
    argv.push_back(profile.ssh_user + "@" + profile.guest_ip + ":" + guest_path);
    return argv;
}

std::vector<std::string> scp_from_guest_argv(const config::VmProfile& profile,
                                             const std::string& guest_path,
                                             const std::filesystem::path& local) {
    auto argv = scp_base(profile);
    argv.push_back(profile.ssh_user + "@" + profile.guest_ip + ":" + guest_path);
    argv.push_back(local.string());
    return argv;
}

} // namespace samosa::vm
