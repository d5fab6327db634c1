// SPDX-License-Identifier: Apache-2.0
//
// samosa: run a binary inside the sandbox pipeline, validate run configs,
// and post-process run directories into aligned series and plots.

#include "samosa/analysis.hpp"
#include "samosa/config.hpp"
#include "samosa/errors.hpp"
#include "samosa/pipeline.hpp"
#include "samosa/scenario.hpp"

#include <cstdio>
#include <string>

#include <CLI11.hpp>

namespace {

// Exit codes: 0 ok, 2 config error, 3 validation violations, 4 pipeline
// failure, 5 analysis/missing artifacts, 1 anything else.
enum ExitCode {
    kOk = 0,
    kGenericError = 1,
    kConfigError = 2,
    kValidationError = 3,
    kPipelineError = 4,
    kAnalysisError = 5,
};

int cmd_validate(const std::string& config_path) {
    auto cfg = samosa::config::load_config(config_path);
    auto violations = samosa::config::validate_config(cfg);
    if (violations.empty()) {
        std::printf("%s: OK\n", config_path.c_str());
        return kOk;
    }
    for (const auto& v : violations)
        std::fprintf(stderr, "violation: %s: %s\n", v.field.c_str(), v.rule.c_str());
    return kValidationError;
}

int cmd_run(const std::string& config_path, const std::string& backend_name,
            const std::string& scenario_path, const std::string& out_dir) {
    auto cfg = samosa::config::load_config(config_path);

    samosa::vm::BackendKind backend = backend_name == "qemu"
                                          ? samosa::vm::BackendKind::QEMU
                                          : samosa::vm::BackendKind::MOCK;

    std::optional<samosa::vm::ScenarioScript> scenario;
    if (!scenario_path.empty())
        scenario = samosa::vm::load_scenario(scenario_path);

    samosa::pipeline::RunOptions options;
    if (!out_dir.empty())
        options.output_dir_override = out_dir;

    auto result = samosa::pipeline::run_pipeline(cfg, backend, scenario, options);
    std::printf("run %s complete\n", result.manifest.run_id.c_str());
    std::printf("  run dir:   %s\n", result.run_dir.string().c_str());
    std::printf("  exec span: %.3f s\n",
                static_cast<double>(result.manifest.t_exec_halt -
                                    result.manifest.t_exec_start) /
                    1e9);
    std::printf("  artifacts: %zu files (see run.json)\n",
                result.manifest.artifacts.size());
    return kOk;
}

int cmd_analyze(const std::string& run_dir, std::size_t top_k, std::uint32_t window_ms) {
    auto report = samosa::analysis::analyze_run(run_dir, top_k, window_ms);
    auto written = samosa::analysis::emit_outputs(report, run_dir);
    std::printf("analyzed %s\n", run_dir.c_str());
    for (const auto& name : {"syscalls", "hpc", "network", "disk"}) {
        auto it = report.clip_stats.find(name);
        if (it != report.clip_stats.end())
            std::printf("  %-9s kept %zu, outside window %zu\n", name, it->second.kept,
                        it->second.dropped);
    }
    for (const auto& path : written)
        std::printf("  wrote %s\n", path.string().c_str());
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SaMOSA: multi-architecture sandbox orchestration and "
                 "side-channel analysis"};
    app.require_subcommand(1);

    std::string config_path;
    std::string backend = "qemu";
    std::string scenario_path;
    std::string out_dir;
    auto* run = app.add_subcommand("run", "execute the full sandbox pipeline");
    run->add_option("config", config_path, "run-config document")->required();
    run->add_option("--backend", backend, "qemu or mock")
        ->check(CLI::IsMember({"qemu", "mock"}));
    run->add_option("--scenario", scenario_path,
                    "scenario JSON for the mock backend");
    run->add_option("--out", out_dir, "override output_dir from the config");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check a run-config document");
    validate->add_option("config", validate_path, "run-config document")->required();

    std::string run_dir;
    std::size_t top_k = 15;
    std::uint32_t window_ms = 0;
    auto* analyze = app.add_subcommand("analyze", "post-process a run directory");
    analyze->add_option("run_dir", run_dir, "directory produced by `samosa run`")
        ->required();
    analyze->add_option("--top-k", top_k, "how many syscalls to rank (default 15)");
    analyze->add_option("--window-ms", window_ms,
                        "network window override (default: the run's configured window)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed())
            return cmd_validate(validate_path);
        if (run->parsed())
            return cmd_run(config_path, backend, scenario_path, out_dir);
        if (analyze->parsed())
            return cmd_analyze(run_dir, top_k, window_ms);
        return kGenericError;
    } catch (const samosa::SyntaxError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigError;
    } catch (const samosa::SchemaError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigError;
    } catch (const samosa::pipeline::PipelineError& e) {
        std::fprintf(stderr, "pipeline failed: %s\n", e.what());
        std::fprintf(stderr, "steps completed:\n");
        for (const auto& rec : e.step_log())
            std::fprintf(stderr, "  %-20s %s\n",
                         samosa::pipeline::to_string(rec.step).c_str(),
                         rec.outcome.c_str());
        return kPipelineError;
    } catch (const samosa::MissingArtifact& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kAnalysisError;
    } catch (const samosa::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kGenericError;
    }
}
