#ifndef SENTMTL_COMMANDS_HPP
#define SENTMTL_COMMANDS_HPP

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentmtl/config.hpp"
#include "sentmtl/corpus.hpp"
#include "sentmtl/errors.hpp"
#include "sentmtl/evaluator.hpp"
#include "sentmtl/hash.hpp"
#include "sentmtl/io.hpp"
#include "sentmtl/preprocess.hpp"
#include "sentmtl/synthetic.hpp"
#include "sentmtl/trainer.hpp"
#include "sentmtl/version.hpp"

namespace sentmtl {

// Process exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;        // bad config or arguments
inline constexpr int kExitData = 2;         // unreadable or malformed data
inline constexpr int kExitDivergence = 3;   // training produced a non-finite loss
inline constexpr int kExitReconcile = 4;    // --strict count reconciliation failed

namespace detail {

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void print_stats_row(std::ostream& out, const std::string& name, const LevelStats& stats)
{
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-8s examples=%-8llu positive=%-8llu negative=%-8llu neutral=%llu",
                  name.c_str(), static_cast<unsigned long long>(stats.examples),
                  static_cast<unsigned long long>(stats.positive),
                  static_cast<unsigned long long>(stats.negative),
                  static_cast<unsigned long long>(stats.neutral));
    out << buf << "\n";
}

/// Compares observed stats against an expectation block. Returns the number
/// of mismatching cells and prints one delta line per pool.
inline int reconcile(std::ostream& out, const std::map<std::string, LevelStats>& expected,
                     const std::map<std::string, LevelStats>& observed)
{
    int mismatches = 0;
    const auto delta = [](std::uint64_t obs, std::uint64_t exp) {
        return static_cast<long long>(obs) - static_cast<long long>(exp);
    };
    for (const auto& [name, exp] : expected) {
        const auto it = observed.find(name);
        if (it == observed.end()) {
            out << "  " << name << ": expected but not present\n";
            ++mismatches;
            continue;
        }
        const LevelStats& obs = it->second;
        const long long d_examples = delta(obs.examples, exp.examples);
        const long long d_pos = delta(obs.positive, exp.positive);
        const long long d_neg = delta(obs.negative, exp.negative);
        const long long d_neu = delta(obs.neutral, exp.neutral);
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "  %-8s delta examples=%+lld positive=%+lld negative=%+lld neutral=%+lld",
                      name.c_str(), d_examples, d_pos, d_neg, d_neu);
        out << buf << "\n";
        mismatches += (d_examples != 0) + (d_pos != 0) + (d_neg != 0) + (d_neu != 0);
    }
    return mismatches;
}

inline nlohmann::json stats_to_json(const LevelStats& stats)
{
    return {{"examples", stats.examples},
            {"positive", stats.positive},
            {"negative", stats.negative},
            {"neutral", stats.neutral}};
}

}  // namespace detail

/// Loads every configured corpus file, unfiltered. A path that does not
/// exist is a configuration problem, reported with its field.
inline std::map<std::string, std::vector<LabeledInstance>> load_all_corpora(const RunConfig& config)
{
    std::map<std::string, std::vector<LabeledInstance>> pools;
    for (const auto& [name, entry] : config.corpora) {
        if (!std::filesystem::exists(entry.path)) {
            throw ConfigError("config field 'corpora." + name + ".path': file does not exist: "
                              + entry.path.string());
        }
        pools[name] = load_corpus(entry.path, entry.language, entry.level, entry.columns);
    }
    return pools;
}

/// ingest: parse the corpora and report per-pool statistics. Exits nonzero
/// on any parse error; reconciles against expected_raw_stats when present.
inline int cmd_ingest(const RunConfig& config, std::ostream& out = std::cout)
{
    const auto pools = load_all_corpora(config);
    std::map<std::string, LevelStats> observed;
    out << "corpus statistics (raw)\n";
    for (const auto& [name, instances] : pools) {
        observed[name] = dataset_stats(instances);
        detail::print_stats_row(out, name, observed[name]);
    }
    if (config.likert_audit) {
        for (const auto& [name, instances] : pools) {
            const auto mismatches = audit_likert(instances, config.likert);
            out << "likert audit " << name << ": " << mismatches.size()
                << " label(s) disagree with the score-derived label\n";
        }
    }
    if (!config.expected_raw_stats.empty()) {
        out << "reconciliation against expected raw statistics\n";
        const int mismatches = detail::reconcile(out, config.expected_raw_stats, observed);
        out << (mismatches == 0 ? "all raw counts match\n"
                                : std::to_string(mismatches) + " raw count(s) differ\n");
    }
    return kExitOk;
}

struct PreprocessResult {
    std::map<std::string, DatasetSplit> splits;
    std::map<std::string, LevelStats> clean_stats;
    int reconcile_mismatches = 0;
};

/// The shared ingest -> clean -> split stage behind preprocess and train.
inline PreprocessResult run_preprocess(const RunConfig& config)
{
    PreprocessResult result;
    const auto pools = load_all_corpora(config);
    for (const auto& [name, instances] : pools) {
        const auto cleaned = clean_pipeline(instances, config.dedup);
        result.clean_stats[name] = dataset_stats(cleaned);
        result.splits[name] = stratified_split(cleaned, config.split);
    }
    return result;
}

/// preprocess: clean every pool, split it, and persist cleaned pools plus
/// the split manifest under out_dir. With `strict`, any mismatch against
/// expected_clean_stats exits with kExitReconcile.
inline int cmd_preprocess(const RunConfig& config, bool strict = false,
                          std::ostream& out = std::cout)
{
    std::filesystem::create_directories(config.out_dir);
    const auto pools = load_all_corpora(config);

    PreprocessResult result;
    nlohmann::json summary;
    summary["format_version"] = kManifestFormatVersion;
    summary["toolkit_version"] = kVersion;
    summary["split"] = {{"test_fraction", config.split.test_fraction},
                        {"dev_fraction_of_train", config.split.dev_fraction_of_train},
                        {"seed", config.split.seed}};
    nlohmann::json pools_json = nlohmann::json::object();

    out << "preprocess\n";
    for (const auto& [name, instances] : pools) {
        std::vector<DedupRemoval> removals;
        const auto no_empties = drop_empty(instances);
        const auto cleaned = deduplicate(no_empties, config.dedup, &removals);
        result.clean_stats[name] = dataset_stats(cleaned);
        result.splits[name] = stratified_split(cleaned, config.split);

        const auto raw_stats = dataset_stats(instances);
        const std::size_t empties_dropped = instances.size() - no_empties.size();
        detail::print_stats_row(out, name, result.clean_stats[name]);
        out << "           (dropped " << empties_dropped << " empty, " << removals.size()
            << " duplicate rows)\n";

        save_corpus(config.out_dir / (name + ".clean.tsv"), cleaned);
        pools_json[name] = {
            {"raw", detail::stats_to_json(raw_stats)},
            {"clean", detail::stats_to_json(result.clean_stats[name])},
            {"empties_dropped", empties_dropped},
            {"duplicates_dropped", removals.size()},
            {"train", result.splits[name].train.size()},
            {"dev", result.splits[name].dev.size()},
            {"test", result.splits[name].test.size()},
        };
    }
    summary["pools"] = pools_json;

    std::map<std::string, const DatasetSplit*> split_ptrs;
    for (const auto& [name, split] : result.splits) {
        split_ptrs[name] = &split;
    }
    write_split_manifest(config.out_dir / "split_manifest.tsv", split_ptrs);
    io::write_file(config.out_dir / "preprocess_summary.json", summary.dump(2) + "\n");

    if (!config.expected_clean_stats.empty()) {
        out << "reconciliation against expected cleaned statistics\n";
        result.reconcile_mismatches =
            detail::reconcile(out, config.expected_clean_stats, result.clean_stats);
        out << (result.reconcile_mismatches == 0
                    ? "all cleaned counts match\n"
                    : std::to_string(result.reconcile_mismatches) + " cleaned count(s) differ\n");
        if (strict && result.reconcile_mismatches != 0) {
            return kExitReconcile;
        }
    }
    return kExitOk;
}

/// Reads the cleaned pools and split manifest that cmd_preprocess wrote.
inline std::map<std::string, DatasetSplit> load_prepared_splits(const RunConfig& config)
{
    const auto manifest_path = config.out_dir / "split_manifest.tsv";
    if (!std::filesystem::exists(manifest_path)) {
        throw StateError("no split manifest at " + manifest_path.string()
                         + "; run the preprocess command first");
    }
    const auto manifest = read_split_manifest(manifest_path);
    std::map<std::string, DatasetSplit> splits;
    for (const auto& [name, entry] : config.corpora) {
        const auto pool_path = config.out_dir / (name + ".clean.tsv");
        if (!std::filesystem::exists(pool_path)) {
            throw StateError("missing cleaned pool " + pool_path.string()
                             + "; run the preprocess command first");
        }
        auto cleaned = load_corpus(pool_path, entry.language, entry.level, export_mapping());
        const auto manifest_it = manifest.find(name);
        if (manifest_it == manifest.end()) {
            throw StateError("split manifest does not cover pool '" + name + "'");
        }
        splits[name] = apply_split_manifest(cleaned, manifest_it->second);
    }
    return splits;
}

struct TrainOutcome {
    std::filesystem::path run_dir;
    RunHistory history;
};

/// train: run one scenario end to end and persist checkpoints, history, and
/// the run manifest under a scenario+seed-named run directory.
inline TrainOutcome cmd_train(const RunConfig& config, const std::string& scenario_name,
                              std::optional<std::filesystem::path> run_dir_override = {},
                              std::ostream& out = std::cout)
{
    const Scenario scenario = parse_scenario(scenario_name);
    const auto splits = load_prepared_splits(config);

    ScenarioData data;
    for (auto& [name, split] : splits) {
        data.splits[name] = split;
    }

    const std::filesystem::path run_dir = run_dir_override.value_or(
        config.out_dir / "runs"
        / (std::string(to_string(scenario)) + "_seed" + std::to_string(config.train.seed)));
    std::filesystem::create_directories(run_dir);

    ModelBundle bundle = make_scenario_bundle(scenario, config.encoder, config.train);

    TrainHooks hooks;
    hooks.on_epoch = [&](const EpochRecord& record, const ModelBundle& snapshot) {
        save_checkpoint(run_dir / ("checkpoint_" + record.checkpoint_id + ".json"), snapshot);
        out << "epoch " << record.epoch << ": selection "
            << format_percent(record.selection_value) << "\n";
    };

    TrainResult result = train_scenario(scenario, data, std::move(bundle), config.train, hooks);

    save_checkpoint(run_dir / "checkpoint_best.json", result.best);
    io::write_file(run_dir / "history.jsonl", history_to_jsonl(result.history));

    std::uint64_t hr_trained = 0;
    std::uint64_t sl_trained = 0;
    for (const StepRecord& step : result.history.steps) {
        hr_trained += step.hr_instances;
        sl_trained += step.sl_instances;
    }

    nlohmann::json manifest;
    manifest["format_version"] = kManifestFormatVersion;
    manifest["toolkit_version"] = kVersion;
    manifest["created_utc"] = detail::utc_timestamp();
    manifest["scenario"] = to_string(scenario);
    manifest["seed"] = config.train.seed;
    manifest["config"] = config.raw;
    manifest["selected_checkpoint"] = result.history.selected_checkpoint;
    manifest["steps"] = result.history.steps.size();
    manifest["hr_instances_trained"] = hr_trained;
    manifest["sl_instances_trained"] = sl_trained;
    nlohmann::json corpus_digests = nlohmann::json::object();
    for (const auto& [name, entry] : config.corpora) {
        corpus_digests[name] = file_digest(entry.path);
    }
    manifest["corpus_digests"] = corpus_digests;

    nlohmann::json artifacts = nlohmann::json::array();
    const auto add_artifact = [&](const std::filesystem::path& p) {
        artifacts.push_back({{"path", p.filename().string()}, {"digest", file_digest(p)}});
    };
    add_artifact(run_dir / "checkpoint_best.json");
    add_artifact(run_dir / "history.jsonl");
    for (const EpochRecord& record : result.history.epochs) {
        add_artifact(run_dir / ("checkpoint_" + record.checkpoint_id + ".json"));
    }
    add_artifact(config.out_dir / "split_manifest.tsv");
    // the split manifest lives outside the run dir; record its absolute path
    artifacts.back()["path"] =
        std::filesystem::absolute(config.out_dir / "split_manifest.tsv").string();
    manifest["artifacts"] = artifacts;
    io::write_file(run_dir / "manifest.json", manifest.dump(2) + "\n");

    out << "run complete: " << run_dir.string() << " (selected "
        << result.history.selected_checkpoint << ")\n";
    return TrainOutcome{run_dir, std::move(result.history)};
}

/// Every artifact a manifest lists must exist with a matching digest.
/// Returns the problems found (empty means the manifest is complete).
inline std::vector<std::string> verify_manifest(const std::filesystem::path& run_dir)
{
    const auto manifest_path = run_dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
        return {"missing manifest.json"};
    }
    const auto manifest = nlohmann::json::parse(io::read_file(manifest_path));
    std::vector<std::string> problems;
    for (const auto& artifact : manifest.at("artifacts")) {
        const std::string rel = artifact.at("path").get<std::string>();
        std::filesystem::path path(rel);
        if (path.is_relative()) path = run_dir / path;
        if (!std::filesystem::exists(path)) {
            problems.push_back("missing artifact: " + rel);
            continue;
        }
        if (file_digest(path) != artifact.at("digest").get<std::string>()) {
            problems.push_back("digest mismatch: " + rel);
        }
    }
    return problems;
}

/// evaluate: score the selected checkpoint of a run on named test sets.
/// Always includes the majority-class baseline row; writes per-set
/// prediction files, metrics JSON, and a rendered table.
inline int cmd_evaluate(const RunConfig& config, const std::filesystem::path& run_dir,
                        std::vector<std::string> test_sets, std::ostream& out = std::cout)
{
    const auto checkpoint_path = run_dir / "checkpoint_best.json";
    if (!std::filesystem::exists(checkpoint_path)) {
        throw StateError("run dir has no selected checkpoint: " + checkpoint_path.string());
    }
    const ModelBundle bundle = load_checkpoint(checkpoint_path);
    const auto splits = load_prepared_splits(config);

    if (test_sets.empty()) {
        for (const auto& [name, split] : splits) test_sets.push_back(name);
    }
    for (const auto& name : test_sets) {
        if (splits.count(name) == 0) {
            std::string names;
            for (const auto& [n, s] : splits) {
                if (!names.empty()) names += ", ";
                names += n;
            }
            throw ConfigError("unknown test set '" + name + "' (prepared pools: " + names + ")");
        }
    }

    std::string scenario_name = "model";
    {
        const auto manifest_path = run_dir / "manifest.json";
        if (std::filesystem::exists(manifest_path)) {
            scenario_name = nlohmann::json::parse(io::read_file(manifest_path))
                                .value("scenario", scenario_name);
        }
    }

    const auto eval_dir = run_dir / "evaluation";
    std::filesystem::create_directories(eval_dir);

    std::map<std::string, MetricsReport> model_cells;
    std::map<std::string, MetricsReport> baseline_cells;
    for (const auto& name : test_sets) {
        const DatasetSplit& split = splits.at(name);
        if (split.test.empty()) {
            throw StateError("test part of pool '" + name + "' is empty");
        }
        const auto& entry = config.corpora.at(name);
        const Granularity task = entry.level;
        if (bundle.heads.count(task) == 0) {
            throw StateError(std::string("checkpoint has no ") + to_string(task)
                             + " head; cannot score test set '" + name + "'");
        }

        std::vector<std::string> texts;
        std::vector<SentimentLabel> gold;
        for (const auto& inst : split.test) {
            texts.push_back(inst.text);
            gold.push_back(inst.label);
        }
        const PredictionBatch batch = predict(texts, bundle, task);
        model_cells[name] = macro_prf(gold, batch.predicted);

        std::vector<SentimentLabel> train_labels;
        train_labels.reserve(split.train.size() + split.dev.size());
        for (const auto& inst : split.train) train_labels.push_back(inst.label);
        for (const auto& inst : split.dev) train_labels.push_back(inst.label);
        baseline_cells[name] = majority_baseline(train_labels, gold);

        io::DelimitedWriter predictions(
            eval_dir / ("predictions_" + name + ".tsv"), '\t',
            {"id", "gold", "predicted", "p_positive", "p_negative", "p_neutral"});
        char buf[32];
        const auto fmt = [&](double v) {
            std::snprintf(buf, sizeof(buf), "%.6f", v);
            return std::string(buf);
        };
        for (std::size_t i = 0; i < split.test.size(); ++i) {
            const auto row = batch.probabilities.row(i);
            predictions.write_row({
                split.test[i].id,
                to_string(gold[i]),
                to_string(batch.predicted[i]),
                fmt(row[static_cast<std::size_t>(SentimentLabel::positive)]),
                fmt(row[static_cast<std::size_t>(SentimentLabel::negative)]),
                fmt(row[static_cast<std::size_t>(SentimentLabel::neutral)]),
            });
        }
        nlohmann::json metrics{
            {"test_set", name},
            {"scenario", scenario_name},
            {"model", metrics_to_json(model_cells[name])},
            {"majority_baseline", metrics_to_json(baseline_cells[name])},
        };
        io::write_file(eval_dir / ("metrics_" + name + ".json"), metrics.dump(2) + "\n");
    }

    std::vector<std::string> ordered_sets;
    for (const auto& name : known_pool_names()) {
        if (model_cells.count(name) != 0) ordered_sets.push_back(name);
    }
    for (const auto& [name, cells] : model_cells) {
        if (std::find(ordered_sets.begin(), ordered_sets.end(), name) == ordered_sets.end()) {
            ordered_sets.push_back(name);
        }
    }
    const std::string table = render_report_table(
        ordered_sets, {{"Majority class", baseline_cells}, {scenario_name, model_cells}});
    io::write_file(eval_dir / "report.txt", table);
    out << table;
    return kExitOk;
}

/// report: combine the evaluation outputs of several runs into one table.
inline int cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                      std::ostream& out = std::cout)
{
    if (run_dirs.empty()) {
        throw ConfigError("report needs at least one run directory");
    }
    std::vector<std::string> ordered_sets;
    std::map<std::string, MetricsReport> baseline_cells;
    std::vector<std::pair<std::string, std::map<std::string, MetricsReport>>> rows;
    for (const auto& run_dir : run_dirs) {
        const auto eval_dir = run_dir / "evaluation";
        if (!std::filesystem::exists(eval_dir)) {
            throw StateError("run has no evaluation outputs: " + run_dir.string());
        }
        std::map<std::string, MetricsReport> cells;
        std::string scenario_name = run_dir.filename().string();
        std::vector<std::filesystem::path> metric_files;
        for (const auto& entry : std::filesystem::directory_iterator(eval_dir)) {
            const auto filename = entry.path().filename().string();
            if (filename.rfind("metrics_", 0) == 0 && entry.path().extension() == ".json") {
                metric_files.push_back(entry.path());
            }
        }
        std::sort(metric_files.begin(), metric_files.end());
        for (const auto& path : metric_files) {
            const auto metrics = nlohmann::json::parse(io::read_file(path));
            const std::string set_name = metrics.at("test_set").get<std::string>();
            scenario_name = metrics.value("scenario", scenario_name);
            cells[set_name] = metrics_from_json(metrics.at("model"));
            baseline_cells[set_name] = metrics_from_json(metrics.at("majority_baseline"));
            if (std::find(ordered_sets.begin(), ordered_sets.end(), set_name)
                == ordered_sets.end()) {
                ordered_sets.push_back(set_name);
            }
        }
        rows.emplace_back(scenario_name, std::move(cells));
    }

    std::vector<std::string> canonical;
    for (const auto& name : known_pool_names()) {
        if (std::find(ordered_sets.begin(), ordered_sets.end(), name) != ordered_sets.end()) {
            canonical.push_back(name);
        }
    }
    for (const auto& name : ordered_sets) {
        if (std::find(canonical.begin(), canonical.end(), name) == canonical.end()) {
            canonical.push_back(name);
        }
    }

    std::vector<std::pair<std::string, std::map<std::string, MetricsReport>>> all_rows;
    all_rows.emplace_back("Majority class", baseline_cells);
    for (auto& row : rows) all_rows.push_back(std::move(row));
    out << render_report_table(canonical, all_rows);
    return kExitOk;
}

}  // namespace sentmtl

#endif  // SENTMTL_COMMANDS_HPP
