// SPDX-License-Identifier: Apache-2.0
#include "samosa/config.hpp"

#include "samosa/config_doc.hpp"
#include "samosa/errors.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace samosa::config {

namespace {

std::int64_t require_positive_int(const DocValue& v, const std::string& field) {
    if (!v.is_int())
        throw SchemaError("field '" + field + "' must be an integer");
    if (v.as_int() <= 0)
        throw SchemaError("field '" + field + "' must be positive");
    return v.as_int();
}

std::string require_string(const DocValue& v, const std::string& field) {
    if (!v.is_string())
        throw SchemaError("field '" + field + "' must be a string");
    return v.as_string();
}

bool require_bool(const DocValue& v, const std::string& field) {
    if (!v.is_bool())
        throw SchemaError("field '" + field + "' must be a boolean");
    return v.as_bool();
}

std::vector<std::string> require_string_array(const DocValue& v, const std::string& field) {
    if (!v.is_array())
        throw SchemaError("field '" + field + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& item : v.as_array()) {
        if (!item.is_string())
            throw SchemaError("field '" + field + "' must contain only strings");
        out.push_back(item.as_string());
    }
    return out;
}

void reject_unknown_keys(const DocTable& t, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [k, v] : t.entries)
        if (!known.count(k))
            throw SchemaError("unknown field '" + k + "' in " + where);
}

void apply_profile_overrides(VmProfile& p, const DocTable& t) {
    reject_unknown_keys(t,
                        {"machine_type", "cpu_model", "ram_mb", "cores", "disk_device",
                         "kvm", "base_image", "guest_ip", "ssh_port", "ssh_user",
                         "os_label", "capture_ram_dir"},
                        "[profile]");
    if (const auto* v = t.find("machine_type"))
        p.machine_type = require_string(*v, "profile.machine_type");
    if (const auto* v = t.find("cpu_model"))
        p.cpu_model = require_string(*v, "profile.cpu_model");
    if (const auto* v = t.find("ram_mb"))
        p.ram_mb = static_cast<std::uint32_t>(require_positive_int(*v, "profile.ram_mb"));
    if (const auto* v = t.find("cores"))
        p.cores = static_cast<std::uint32_t>(require_positive_int(*v, "profile.cores"));
    if (const auto* v = t.find("disk_device"))
        p.disk_device = disk_device_from_string(require_string(*v, "profile.disk_device"));
    if (const auto* v = t.find("kvm"))
        p.kvm = require_bool(*v, "profile.kvm");
    if (const auto* v = t.find("base_image"))
        p.base_image = require_string(*v, "profile.base_image");
    if (const auto* v = t.find("guest_ip"))
        p.guest_ip = require_string(*v, "profile.guest_ip");
    if (const auto* v = t.find("ssh_port")) {
        std::int64_t port = require_positive_int(*v, "profile.ssh_port");
        if (port > 65535)
            throw SchemaError("profile.ssh_port out of range");
        p.ssh_port = static_cast<std::uint16_t>(port);
    }
    if (const auto* v = t.find("ssh_user"))
        p.ssh_user = require_string(*v, "profile.ssh_user");
    if (const auto* v = t.find("os_label"))
        p.os_label = require_string(*v, "profile.os_label");
    if (const auto* v = t.find("capture_ram_dir"))
        p.capture_ram_dir = require_string(*v, "profile.capture_ram_dir");
}

HookSpec parse_hook(const DocTable& t, size_t index) {
    const std::string where = "[[hook]] #" + std::to_string(index + 1);
    reject_unknown_keys(t, {"stage", "locus", "command", "timeout_s"}, where);
    HookSpec h;
    const auto* stage = t.find("stage");
    if (!stage)
        throw SchemaError(where + " is missing 'stage'");
    h.stage = hook_stage_from_string(require_string(*stage, "hook.stage"));
    if (const auto* v = t.find("locus"))
        h.locus = hook_locus_from_string(require_string(*v, "hook.locus"));
    const auto* cmd = t.find("command");
    if (!cmd)
        throw SchemaError(where + " is missing 'command'");
    h.command = require_string(*cmd, "hook.command");
    if (const auto* v = t.find("timeout_s"))
        h.timeout_s = static_cast<std::uint32_t>(require_positive_int(*v, "hook.timeout_s"));
    return h;
}

} // namespace

const std::vector<std::string>& default_hpc_events() {
    static const std::vector<std::string> events = {
        "instructions", "branch-instructions", "dTLB-loads", "L1-dcache-loads",
        "mem-stores"};
    return events;
}

VmProfile default_profile(Architecture arch) {
    VmProfile p;
    p.arch = arch;
    p.ram_mb = 4096;
    p.cores = 4;
    p.ssh_port = 22;
    p.ssh_user = "root";
    p.guest_ip = "192.168.100.2";
    switch (arch) {
    case Architecture::X86_64:
        p.machine_type = "q35";
        p.cpu_model = "host";
        p.disk_device = DiskDevice::NVME;
        p.kvm = true;
        p.base_image = "images/ubuntu2004-x86_64.qcow2";
        p.os_label = "ubuntu-20.04";
        break;
    case Architecture::ARM64:
        p.machine_type = "virt";
        p.cpu_model = "cortex-a72";
        p.disk_device = DiskDevice::VIRTIO_BLK;
        p.kvm = false;
        p.base_image = "images/ubuntu2004-arm64.qcow2";
        p.os_label = "ubuntu-20.04";
        break;
    case Architecture::PPC64LE:
        p.machine_type = "pseries";
        p.cpu_model = "power9";
        p.disk_device = DiskDevice::NVME;
        p.kvm = false;
        p.base_image = "images/debian-trixie-ppc64le.qcow2";
        p.os_label = "debian-trixie";
        break;
    }
    return p;
}

RunConfig parse_config_text(const std::string& text) {
    Document doc = parse_document(text);

    reject_unknown_keys(doc.root,
                        {"binary", "args", "duration_s", "network_mode", "arch",
                         "output_dir", "hooks"},
                        "the top level");
    for (const auto& [name, table] : doc.tables) {
        (void)table;
        if (name != "profile" && name != "hpc" && name != "net")
            throw SchemaError("unknown table [" + name + "]");
    }

    RunConfig cfg;

    const auto* binary = doc.root.find("binary");
    if (!binary)
        throw SchemaError("missing required field 'binary'");
    cfg.binary_path = require_string(*binary, "binary");

    const auto* arch = doc.root.find("arch");
    if (!arch)
        throw SchemaError("missing required field 'arch'");
    cfg.profile = default_profile(architecture_from_string(require_string(*arch, "arch")));

    if (const auto* v = doc.root.find("args"))
        cfg.args = require_string_array(*v, "args");
    if (const auto* v = doc.root.find("duration_s"))
        cfg.exec_duration_s =
            static_cast<std::uint32_t>(require_positive_int(*v, "duration_s"));
    if (const auto* v = doc.root.find("network_mode"))
        cfg.network_mode = network_mode_from_string(require_string(*v, "network_mode"));
    if (const auto* v = doc.root.find("output_dir"))
        cfg.output_dir = require_string(*v, "output_dir");
    if (const auto* v = doc.root.find("hooks")) {
        // Only the explicit empty form is meaningful here; hooks are
        // otherwise declared as [[hook]] tables.
        if (!v->is_array() || !v->as_array().empty())
            throw SchemaError("'hooks' accepts only the empty list []; use [[hook]] tables");
    }

    if (const auto* t = doc.table("profile"))
        apply_profile_overrides(cfg.profile, *t);

    cfg.hpc_events = default_hpc_events();
    if (const auto* t = doc.table("hpc")) {
        reject_unknown_keys(*t, {"events", "interval_ms"}, "[hpc]");
        if (const auto* v = t->find("events")) {
            cfg.hpc_events = require_string_array(*v, "hpc.events");
            if (cfg.hpc_events.empty())
                throw SchemaError("hpc.events must not be empty");
        }
        if (const auto* v = t->find("interval_ms"))
            cfg.hpc_interval_ms =
                static_cast<std::uint32_t>(require_positive_int(*v, "hpc.interval_ms"));
    }

    if (const auto* t = doc.table("net")) {
        reject_unknown_keys(*t, {"window_ms"}, "[net]");
        if (const auto* v = t->find("window_ms"))
            cfg.net_window_ms =
                static_cast<std::uint32_t>(require_positive_int(*v, "net.window_ms"));
    }

    for (size_t i = 0; i < doc.hooks.size(); ++i)
        cfg.hooks.push_back(parse_hook(doc.hooks[i], i));

    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string render_config_text(const RunConfig& cfg) {
    Document doc;
    doc.root.set("binary", cfg.binary_path.string());
    DocValue::Array args;
    for (const auto& a : cfg.args)
        args.emplace_back(a);
    doc.root.set("args", DocValue(std::move(args)));
    doc.root.set("duration_s", static_cast<std::int64_t>(cfg.exec_duration_s));
    doc.root.set("network_mode", to_string(cfg.network_mode));
    doc.root.set("arch", to_string(cfg.profile.arch));
    doc.root.set("output_dir", cfg.output_dir.string());

    DocTable profile;
    profile.set("machine_type", cfg.profile.machine_type);
    profile.set("cpu_model", cfg.profile.cpu_model);
    profile.set("ram_mb", static_cast<std::int64_t>(cfg.profile.ram_mb));
    profile.set("cores", static_cast<std::int64_t>(cfg.profile.cores));
    profile.set("disk_device", to_string(cfg.profile.disk_device));
    profile.set("kvm", cfg.profile.kvm);
    profile.set("base_image", cfg.profile.base_image.string());
    profile.set("guest_ip", cfg.profile.guest_ip);
    profile.set("ssh_port", static_cast<std::int64_t>(cfg.profile.ssh_port));
    profile.set("ssh_user", cfg.profile.ssh_user);
    profile.set("os_label", cfg.profile.os_label);
    profile.set("capture_ram_dir", cfg.profile.capture_ram_dir);
    doc.tables.emplace_back("profile", std::move(profile));

    DocTable hpc;
    DocValue::Array events;
    for (const auto& e : cfg.hpc_events)
        events.emplace_back(e);
    hpc.set("events", DocValue(std::move(events)));
    hpc.set("interval_ms", static_cast<std::int64_t>(cfg.hpc_interval_ms));
    doc.tables.emplace_back("hpc", std::move(hpc));

    DocTable net;
    net.set("window_ms", static_cast<std::int64_t>(cfg.net_window_ms));
    doc.tables.emplace_back("net", std::move(net));

    for (const auto& h : cfg.hooks) {
        DocTable hook;
        hook.set("stage", to_string(h.stage));
        hook.set("locus", to_string(h.locus));
        hook.set("command", h.command);
        hook.set("timeout_s", static_cast<std::int64_t>(h.timeout_s));
        doc.hooks.push_back(std::move(hook));
    }

    return serialize_document(doc);
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write config file: " + path.string());
    out << render_config_text(cfg);
}

std::vector<Violation> validate_config(const RunConfig& cfg) {
    std::vector<Violation> out;
    const VmProfile& p = cfg.profile;

    std::error_code ec;
    if (!std::filesystem::is_regular_file(cfg.binary_path, ec))
        out.push_back({"binary", "binary_path must exist and be a regular file"});
    if (cfg.exec_duration_s < 1)
        out.push_back({"duration_s", "exec_duration_s must be >= 1"});

    if (p.arch == Architecture::ARM64 && p.disk_device != DiskDevice::VIRTIO_BLK)
        out.push_back({"profile.disk_device",
                       "ARM64 requires a virtio block device (NVMe is not supported)"});
    if (p.arch != Architecture::ARM64 && p.disk_device != DiskDevice::NVME)
        out.push_back({"profile.disk_device",
                       "x86-64 and PPC64LE attach an NVMe disk device"});
    if (p.kvm && p.arch != Architecture::X86_64)
        out.push_back({"profile.kvm", "KVM is available only for x86-64 guests"});
    if (p.ram_mb == 0)
        out.push_back({"profile.ram_mb", "ram_mb must be positive"});
    if (p.cores == 0)
        out.push_back({"profile.cores", "cores must be positive"});
    if (!is_valid_ipv4(p.guest_ip))
        out.push_back({"profile.guest_ip", "guest_ip must be a valid IPv4 address"});
    if (p.ssh_port == 0)
        out.push_back({"profile.ssh_port", "ssh_port must be in [1, 65535]"});
    if (p.base_image.empty())
        out.push_back({"profile.base_image", "base_image must be set"});
    if (p.capture_ram_dir.empty())
        out.push_back({"profile.capture_ram_dir", "capture_ram_dir must be set"});

    for (size_t i = 0; i < cfg.hooks.size(); ++i) {
        const HookSpec& h = cfg.hooks[i];
        const std::string field = "hook[" + std::to_string(i) + "]";
        if ((h.stage == HookStage::PRE_SETUP || h.stage == HookStage::POST_SHUTDOWN) &&
            h.locus == HookLocus::GUEST)
            out.push_back({field + ".locus",
                           "pre_setup and post_shutdown hooks can only run on the host"});
        if (h.command.empty())
            out.push_back({field + ".command", "hook command must be nonempty"});
        if (h.timeout_s == 0)
            out.push_back({field + ".timeout_s", "hook timeout must be positive"});
    }

    if (cfg.hpc_events.empty())
        out.push_back({"hpc.events", "hpc_events must be nonempty"});
    if (cfg.hpc_interval_ms == 0)
        out.push_back({"hpc.interval_ms", "hpc_interval_ms must be positive"});
    if (cfg.net_window_ms == 0)
        out.push_back({"net.window_ms", "net_window_ms must be positive"});
    if (cfg.output_dir.empty())
        out.push_back({"output_dir", "output_dir must be set"});

    return out;
}

std::string to_string(Architecture a) {
    switch (a) {
    case Architecture::X86_64: return "x86_64";
    case Architecture::ARM64: return "arm64";
    case Architecture::PPC64LE: return "ppc64le";
    }
    return "x86_64";
}

std::string to_string(DiskDevice d) {
    return d == DiskDevice::NVME ? "nvme" : "virtio-blk";
}

std::string to_string(HookStage s) {
    switch (s) {
    case HookStage::PRE_SETUP: return "pre_setup";
    case HookStage::PRE_RUN: return "pre_run";
    case HookStage::POST_RUN: return "post_run";
    case HookStage::POST_SHUTDOWN: return "post_shutdown";
    }
    return "pre_run";
}

std::string to_string(HookLocus l) {
    return l == HookLocus::HOST ? "host" : "guest";
}

std::string to_string(NetworkMode m) {
    return m == NetworkMode::EMULATED ? "emulated" : "nat";
}

Architecture architecture_from_string(const std::string& s) {
    if (s == "x86_64")
        return Architecture::X86_64;
    if (s == "arm64")
        return Architecture::ARM64;
    if (s == "ppc64le")
        return Architecture::PPC64LE;
    throw SchemaError("unknown arch '" + s + "' (expected x86_64, arm64, or ppc64le)");
}

DiskDevice disk_device_from_string(const std::string& s) {
    if (s == "nvme")
        return DiskDevice::NVME;
    if (s == "virtio-blk")
        return DiskDevice::VIRTIO_BLK;
    throw SchemaError("unknown disk_device '" + s + "' (expected nvme or virtio-blk)");
}

HookStage hook_stage_from_string(const std::string& s) {
    if (s == "pre_setup")
        return HookStage::PRE_SETUP;
    if (s == "pre_run")
        return HookStage::PRE_RUN;
    if (s == "post_run")
        return HookStage::POST_RUN;
    if (s == "post_shutdown")
        return HookStage::POST_SHUTDOWN;
    throw SchemaError("unknown hook stage '" + s + "'");
}

HookLocus hook_locus_from_string(const std::string& s) {
    if (s == "host")
        return HookLocus::HOST;
    if (s == "guest")
        return HookLocus::GUEST;
    throw SchemaError("unknown hook locus '" + s + "'");
}

NetworkMode network_mode_from_string(const std::string& s) {
    if (s == "emulated")
        return NetworkMode::EMULATED;
    if (s == "nat")
        return NetworkMode::NAT;
    throw SchemaError("unknown network_mode '" + s + "' (expected emulated or nat)");
}

bool is_valid_ipv4(const std::string& s) {
    int octets = 0;
    size_t i = 0;
    while (i < s.size()) {
        if (!std::isdigit(static_cast<unsigned char>(s[i])))
            return false;
        size_t start = i;
        int value = 0;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
            value = value * 10 + (s[i] - '0');
            if (value > 255 || i - start >= 3)
                return false;
            ++i;
        }
        ++octets;
        if (i < s.size()) {
            if (s[i] != '.' || octets == 4)
                return false;
            ++i;
            if (i == s.size())
                return false;
        }
    }
    return octets == 4;
}

bool is_valid_cidr(const std::string& s) {
    size_t slash = s.find('/');
    if (slash == std::string::npos || slash + 1 >= s.size())
        return false;
    if (!is_valid_ipv4(s.substr(0, slash)))
        return false;
    const std::string len = s.substr(slash + 1);
    if (len.empty() || len.size() > 2)
        return false;
    for (char c : len)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            return false;
    return std::stoi(len) <= 32;
}

bool is_valid_ifname(const std::string& s) {
    if (s.empty() || s.size() > 15 || s == "." || s == "..")
        return false;
    for (char c : s)
        if (std::isspace(static_cast<unsigned char>(c)) || c == '/' || c == '\0')
            return false;
    return true;
}

} // namespace samosa::config
