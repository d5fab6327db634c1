// SPDX-License-Identifier: Apache-2.0
#include "samosa/pipeline.hpp"

#include "samosa/errors.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace samosa::pipeline {

using nlohmann::json;

const std::vector<PipelineStep>& canonical_step_order() {
    static const std::vector<PipelineStep> order = {
        PipelineStep::PRE_SETUP_HOOKS, PipelineStep::CLONE_SNAPSHOT,
        PipelineStep::BOOT_VM,         PipelineStep::ENABLE_DISK_TRACE,
        PipelineStep::COPY_BINARY,     PipelineStep::PRE_RUN_HOOKS,
        PipelineStep::START_NETEMU,    PipelineStep::START_HPC,
        PipelineStep::START_SYSDIG,    PipelineStep::EXECUTE_BINARY,
        PipelineStep::WAIT_DURATION,   PipelineStep::HALT_EXECUTION,
        PipelineStep::STOP_COLLECTORS, PipelineStep::POST_RUN_HOOKS,
        PipelineStep::COPY_OUT,        PipelineStep::SHUTDOWN_VM,
        PipelineStep::POST_SHUTDOWN_HOOKS,
    };
    return order;
}

std::string to_string(PipelineStep step) {
    switch (step) {
    case PipelineStep::PRE_SETUP_HOOKS: return "PRE_SETUP_HOOKS";
    case PipelineStep::CLONE_SNAPSHOT: return "CLONE_SNAPSHOT";
    case PipelineStep::BOOT_VM: return "BOOT_VM";
    case PipelineStep::ENABLE_DISK_TRACE: return "ENABLE_DISK_TRACE";
    case PipelineStep::COPY_BINARY: return "COPY_BINARY";
    case PipelineStep::PRE_RUN_HOOKS: return "PRE_RUN_HOOKS";
    case PipelineStep::START_NETEMU: return "START_NETEMU";
    case PipelineStep::START_HPC: return "START_HPC";
    case PipelineStep::START_SYSDIG: return "START_SYSDIG";
    case PipelineStep::EXECUTE_BINARY: return "EXECUTE_BINARY";
    case PipelineStep::WAIT_DURATION: return "WAIT_DURATION";
    case PipelineStep::HALT_EXECUTION: return "HALT_EXECUTION";
    case PipelineStep::STOP_COLLECTORS: return "STOP_COLLECTORS";
    case PipelineStep::POST_RUN_HOOKS: return "POST_RUN_HOOKS";
    case PipelineStep::COPY_OUT: return "COPY_OUT";
    case PipelineStep::SHUTDOWN_VM: return "SHUTDOWN_VM";
    case PipelineStep::POST_SHUTDOWN_HOOKS: return "POST_SHUTDOWN_HOOKS";
    }
    return "UNKNOWN";
}

PipelineStep pipeline_step_from_string(const std::string& s) {
    for (PipelineStep step : canonical_step_order())
        if (to_string(step) == s)
            return step;
    throw SchemaError("unknown pipeline step '" + s + "'");
}

std::optional<std::int64_t> RunManifest::step_ts(PipelineStep step) const {
    for (const auto& rec : step_log)
        if (rec.step == step)
            return rec.ts_ns;
    return std::nullopt;
}

std::string manifest_to_json(const RunManifest& m) {
    json hooks = json::array();
    for (const auto& h : m.hooks_executed)
        hooks.push_back({{"stage", config::to_string(h.spec.stage)},
                         {"locus", config::to_string(h.spec.locus)},
                         {"command", h.spec.command},
                         {"exit_code", h.exit_code}});

    json steps = json::array();
    for (const auto& s : m.step_log)
        steps.push_back({{"step", to_string(s.step)}, {"ts", s.ts_ns}, {"outcome", s.outcome}});

    json artifacts = json::object();
    for (const auto& [name, rel] : m.artifacts)
        artifacts[name] = rel;

    json j = {
        {"run_id", m.run_id},
        {"binary_name", m.binary_name},
        {"args", m.args},
        {"boot_command", m.boot_command},
        {"t_boot", m.t_boot},
        {"t_exec_start", m.t_exec_start},
        {"t_exec_halt", m.t_exec_halt},
        {"t_shutdown", m.t_shutdown},
        {"hooks_executed", hooks},
        {"network_mode", config::to_string(m.network_mode)},
        {"guest_clock_offset_ns", m.guest_clock_offset_ns},
        {"artifacts", artifacts},
        {"step_log", steps},
        {"config",
         {{"guest_ip", m.applied.guest_ip},
          {"disk_device", config::to_string(m.applied.disk_device)},
          {"net_window_ms", m.applied.net_window_ms},
          {"hpc_interval_ms", m.applied.hpc_interval_ms},
          {"hpc_events", m.applied.hpc_events},
          {"exec_duration_s", m.applied.exec_duration_s},
          {"clock_offset_uncertainty_ns", m.applied.clock_offset_uncertainty_ns}}},
    };
    return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SyntaxError(std::string("run manifest: ") + e.what());
    }

    try {
        RunManifest m;
        m.run_id = j.at("run_id").get<std::string>();
        m.binary_name = j.at("binary_name").get<std::string>();
        m.args = j.at("args").get<std::vector<std::string>>();
        m.boot_command = j.at("boot_command").get<std::vector<std::string>>();
        m.t_boot = j.at("t_boot").get<std::int64_t>();
        m.t_exec_start = j.at("t_exec_start").get<std::int64_t>();
        m.t_exec_halt = j.at("t_exec_halt").get<std::int64_t>();
        m.t_shutdown = j.at("t_shutdown").get<std::int64_t>();
        for (const auto& h : j.at("hooks_executed")) {
            HookResult r;
            r.spec.stage = config::hook_stage_from_string(h.at("stage").get<std::string>());
            r.spec.locus = config::hook_locus_from_string(h.at("locus").get<std::string>());
            r.spec.command = h.at("command").get<std::string>();
            r.exit_code = h.at("exit_code").get<int>();
            m.hooks_executed.push_back(std::move(r));
        }
        m.network_mode =
            config::network_mode_from_string(j.at("network_mode").get<std::string>());
        m.guest_clock_offset_ns = j.at("guest_clock_offset_ns").get<std::int64_t>();
        for (const auto& [name, rel] : j.at("artifacts").items())
            m.artifacts[name] = rel.get<std::string>();
        for (const auto& s : j.at("step_log")) {
            StepRecord rec;
            rec.step = pipeline_step_from_string(s.at("step").get<std::string>());
            rec.ts_ns = s.at("ts").get<std::int64_t>();
            rec.outcome = s.at("outcome").get<std::string>();
            m.step_log.push_back(rec);
        }
        if (j.contains("config")) {
            const auto& c = j.at("config");
            m.applied.guest_ip = c.at("guest_ip").get<std::string>();
            m.applied.disk_device =
                config::disk_device_from_string(c.at("disk_device").get<std::string>());
            m.applied.net_window_ms = c.at("net_window_ms").get<std::uint32_t>();
            m.applied.hpc_interval_ms = c.at("hpc_interval_ms").get<std::uint32_t>();
            m.applied.hpc_events = c.at("hpc_events").get<std::vector<std::string>>();
            m.applied.exec_duration_s = c.at("exec_duration_s").get<std::uint32_t>();
            m.applied.clock_offset_uncertainty_ns =
                c.at("clock_offset_uncertainty_ns").get<std::int64_t>();
        }
        return m;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("run manifest: ") + e.what());
    }
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write manifest: " + path.string());
    out << manifest_to_json(m);
    if (!out.flush())
        throw IoError("failed writing manifest: " + path.string());
}

RunManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read manifest: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return manifest_from_json(buf.str());
}

const std::vector<std::string>& core_artifact_names() {
    static const std::vector<std::string> names = {
        "capture.pcap", "syscalls.scap", "syscalls.txt",  "hpc.csv",
        "disk.trace",   "binary.stdout", "binary.stderr", "vm.log",
        "snapshot.img", "run.json",
    };
    return names;
}

const std::vector<std::string>& netemu_artifact_names() {
    static const std::vector<std::string> names = {"fakenet.log", "fakenet_report.html"};
    return names;
}

} // namespace samosa::pipeline
