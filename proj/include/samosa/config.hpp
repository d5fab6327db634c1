// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace samosa::config {

enum class Architecture { X86_64, ARM64, PPC64LE };

enum class DiskDevice { NVME, VIRTIO_BLK };

enum class HookStage { PRE_SETUP, PRE_RUN, POST_RUN, POST_SHUTDOWN };

enum class HookLocus { HOST, GUEST };

enum class NetworkMode { EMULATED, NAT };

/// Per-architecture emulator configuration.
struct VmProfile {
    Architecture arch = Architecture::X86_64;
    std::string machine_type;
    std::string cpu_model;
    std::uint32_t ram_mb = 4096;
    std::uint32_t cores = 4;
    DiskDevice disk_device = DiskDevice::NVME;
    bool kvm = false;
    std::filesystem::path base_image;
    std::string guest_ip;
    std::uint16_t ssh_port = 22;
    std::string ssh_user = "root";
    std::string os_label;
    // tmpfs directory inside the guest for capture files, so syscall capture
    // writes stay out of the disk-activity channel.
    std::string capture_ram_dir = "/dev/shm/samosa";
};

struct HookSpec {
    HookStage stage = HookStage::PRE_RUN;
    HookLocus locus = HookLocus::HOST;
    std::string command;
    std::uint32_t timeout_s = 60;
};

/// One user-declared sandbox run.
struct RunConfig {
    std::filesystem::path binary_path;
    std::vector<std::string> args;
    std::uint32_t exec_duration_s = 60;
    VmProfile profile;
    NetworkMode network_mode = NetworkMode::EMULATED;
    std::vector<HookSpec> hooks;
    std::vector<std::string> hpc_events;
    std::uint32_t hpc_interval_ms = 100;
    std::filesystem::path output_dir = "runs";
    std::uint32_t net_window_ms = 1;
};

/// One broken cross-field constraint: which field, which rule.
struct Violation {
    std::string field;
    std::string rule;
};

// Counters shown in the reference execution plots; used when the document
// does not name an explicit event set.
const std::vector<std::string>& default_hpc_events();

/// Paper-derived defaults for each architecture (virt/cortex-a72 for ARM64,
/// pseries/power9 for PPC64LE, KVM for x86-64; 4096 MB and 4 cores for all).
VmProfile default_profile(Architecture arch);

/// Read and type-check a run-config document. Throws SyntaxError on
/// malformed text and SchemaError on unknown fields or wrong types.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text);

/// Inverse of load_config: render cfg as a document that loads back
/// identically.
void save_config(const RunConfig& cfg, const std::filesystem::path& path);
std::string render_config_text(const RunConfig& cfg);

/// Check every cross-field invariant. Total: returns a (possibly empty)
/// violation list, never throws.
std::vector<Violation> validate_config(const RunConfig& cfg);

// Enum <-> text names used by the document, the manifest, and the CLI.
std::string to_string(Architecture a);
std::string to_string(DiskDevice d);
std::string to_string(HookStage s);
std::string to_string(HookLocus l);
std::string to_string(NetworkMode m);
Architecture architecture_from_string(const std::string& s);
DiskDevice disk_device_from_string(const std::string& s);
HookStage hook_stage_from_string(const std::string& s);
HookLocus hook_locus_from_string(const std::string& s);
NetworkMode network_mode_from_string(const std::string& s);

/// "a.b.c.d" with in-range octets.
bool is_valid_ipv4(const std::string& s);
/// "a.b.c.d/len" CIDR.
bool is_valid_cidr(const std::string& s);
/// Linux network interface name (<= 15 chars, no spaces or slashes).
bool is_valid_ifname(const std::string& s);

} // namespace samosa::config
