#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sentmtl/commands.hpp"
#include "sentmtl/config.hpp"
#include "sentmtl/errors.hpp"
#include "sentmtl/version.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> encoder_kind;
};

sentmtl::RunConfig load_with_overrides(const CommonFlags& flags)
{
    auto config = sentmtl::load_config(flags.config_path);
    if (flags.seed) {
        config.split.seed = *flags.seed;
        config.train.seed = *flags.seed;
    }
    if (flags.encoder_kind) {
        const auto kind = sentmtl::parse_encoder_kind(*flags.encoder_kind);
        if (!kind) {
            throw sentmtl::ConfigError("--encoder must be toy_deterministic or pretrained_adapter");
        }
        config.encoder.kind = *kind;
    }
    return config;
}

void add_common(CLI::App* cmd, CommonFlags& flags)
{
    cmd->add_option("--config", flags.config_path, "run configuration file (JSON)")
        ->required();
    cmd->add_option("--seed", flags.seed, "override the split and train seeds");
    cmd->add_option("--encoder", flags.encoder_kind,
                    "override the encoder kind (toy_deterministic | pretrained_adapter)");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"cross-lingual multi-task sentiment toolkit"};
    app.set_version_flag("--version", sentmtl::kVersion);
    app.require_subcommand(1);

    CommonFlags flags;

    auto* ingest = app.add_subcommand("ingest", "parse the corpora and report statistics");
    add_common(ingest, flags);

    auto* preprocess =
        app.add_subcommand("preprocess", "clean, split, and persist pools and the split manifest");
    add_common(preprocess, flags);
    bool strict = false;
    preprocess->add_flag("--strict", strict,
                         "exit nonzero when counts differ from the expectation block");

    auto* train = app.add_subcommand("train", "train one scenario and persist the run");
    add_common(train, flags);
    std::string scenario;
    std::string run_dir;
    train->add_option("--scenario", scenario, "one of " + sentmtl::scenario_names_joined())
        ->required();
    train->add_option("--run-dir", run_dir, "run directory (default: <out_dir>/runs/<scenario>_seed<seed>)");

    auto* evaluate = app.add_subcommand("evaluate", "score a run's selected checkpoint");
    add_common(evaluate, flags);
    std::string eval_run_dir;
    std::vector<std::string> test_sets;
    evaluate->add_option("--run-dir", eval_run_dir, "run directory holding checkpoint_best.json")
        ->required();
    evaluate->add_option("--test-set", test_sets,
                         "test sets to score (default: every prepared pool)");

    auto* report = app.add_subcommand("report", "combine several runs into one results table");
    std::vector<std::string> report_runs;
    report->add_option("--run-dir", report_runs, "run directories to combine")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            return sentmtl::cmd_ingest(load_with_overrides(flags));
        }
        if (preprocess->parsed()) {
            return sentmtl::cmd_preprocess(load_with_overrides(flags), strict);
        }
        if (train->parsed()) {
            std::optional<std::filesystem::path> run_dir_override;
            if (!run_dir.empty()) run_dir_override = run_dir;
            sentmtl::cmd_train(load_with_overrides(flags), scenario, run_dir_override);
            return sentmtl::kExitOk;
        }
        if (evaluate->parsed()) {
            return sentmtl::cmd_evaluate(load_with_overrides(flags), eval_run_dir, test_sets);
        }
        if (report->parsed()) {
            std::vector<std::filesystem::path> dirs(report_runs.begin(), report_runs.end());
            return sentmtl::cmd_report(dirs);
        }
    } catch (const sentmtl::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sentmtl::kExitUsage;
    } catch (const sentmtl::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sentmtl::kExitDivergence;
    } catch (const sentmtl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sentmtl::kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sentmtl::kExitData;
    }
    return sentmtl::kExitUsage;
}
