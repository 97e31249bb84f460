#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evalcomp/errors.hpp"
#include "evalcomp/pipeline.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> prompt_kind;
    std::optional<std::string> judge_backend;
    std::optional<double> rate;
    bool drop_degenerate = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
    auto* opt = cmd->add_option("--config", flags.config_path, "run configuration JSON");
    if (config_required) opt->required();
    cmd->add_option("--seed", flags.seed, "override config seed");
    cmd->add_option("--out", flags.out_dir, "override output directory");
    cmd->add_option("--prompt", flags.prompt_kind, "prompt template: classic or lite")
        ->check(CLI::IsMember({"classic", "lite"}));
    cmd->add_option("--judge", flags.judge_backend, "judge backend: http, mock or synthetic")
        ->check(CLI::IsMember({"http", "mock", "synthetic"}));
    cmd->add_option("--rate", flags.rate, "fixed compression rate override");
    cmd->add_flag("--drop-degenerate", flags.drop_degenerate,
                  "drop preference records whose deltas are all zero");
}

// Flags win over the config file.
evalcomp::RunConfig load_config(const CommonFlags& flags) {
    evalcomp::RunConfig config = evalcomp::RunConfig::from_json_file(flags.config_path);
    if (flags.seed) config.seed = *flags.seed;
    if (flags.out_dir) config.out_dir = *flags.out_dir;
    if (flags.prompt_kind) config.prompt_kind = evalcomp::prompt_kind_from_string(*flags.prompt_kind);
    if (flags.judge_backend) {
        if (*flags.judge_backend == "http")
            config.judge.backend = evalcomp::JudgeBackendKind::http;
        else if (*flags.judge_backend == "mock")
            config.judge.backend = evalcomp::JudgeBackendKind::mock;
        else
            config.judge.backend = evalcomp::JudgeBackendKind::synthetic;
    }
    if (flags.rate) config.fixed_rate = *flags.rate;
    if (flags.drop_degenerate) config.drop_degenerate = true;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MT-evaluation prompt compression pipeline"};
    app.require_subcommand(1);

    CommonFlags flags;
    bool emit_table = false;
    std::vector<std::string> report_inputs;
    std::string cache_action = "inspect";

    auto* build_sft = app.add_subcommand("build-sft", "emit the SFT compression dataset");
    add_common(build_sft, flags);

    auto* build_prefs =
        app.add_subcommand("build-preferences", "emit the preference dataset (chosen/rejected)");
    add_common(build_prefs, flags);

    auto* evaluate = app.add_subcommand("evaluate", "judge a corpus and write the EvalReport");
    add_common(evaluate, flags);
    evaluate->add_flag("--emit-table", emit_table, "print the report as an aligned table");

    auto* report = app.add_subcommand("report", "render one or more report.json files");
    report->add_option("--inputs", report_inputs, "report.json paths")->required();
    report->add_flag("--emit-table", emit_table, "print as an aligned table");

    auto* cache = app.add_subcommand("cache", "inspect or clear the judge cache");
    add_common(cache, flags);
    cache->add_option("action", cache_action, "inspect or clear")
        ->check(CLI::IsMember({"inspect", "clear"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (build_sft->parsed()) return evalcomp::cmd_build_sft(load_config(flags));
        if (build_prefs->parsed()) return evalcomp::cmd_build_preferences(load_config(flags));
        if (evaluate->parsed()) return evalcomp::cmd_evaluate(load_config(flags), emit_table);
        if (report->parsed()) return evalcomp::cmd_report(report_inputs, emit_table);
        if (cache->parsed()) {
            const evalcomp::RunConfig config = load_config(flags);
            return cache_action == "clear" ? evalcomp::cmd_cache_clear(config)
                                           : evalcomp::cmd_cache_inspect(config);
        }
    } catch (const evalcomp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
