#ifndef SENTMTL_CONFIG_HPP
#define SENTMTL_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentmtl/corpus.hpp"
#include "sentmtl/encoder.hpp"
#include "sentmtl/errors.hpp"
#include "sentmtl/io.hpp"
#include "sentmtl/preprocess.hpp"
#include "sentmtl/trainer.hpp"

namespace sentmtl {

/// One corpus file plus how to read it.
struct CorpusEntry {
    std::filesystem::path path;
    Language language = Language::sl;
    Granularity level = Granularity::document;
    ColumnMapping columns;
};

/// Everything one run needs, parsed from a single JSON config file. The
/// file fully determines a run together with the CLI seed/scenario flags.
struct RunConfig {
    std::filesystem::path config_path;
    std::filesystem::path base_dir;  // config file's directory; relative paths resolve here
    std::filesystem::path out_dir;
    std::map<std::string, CorpusEntry> corpora;  // keyed sl_doc / sl_para / sl_sent / hr_doc
    LikertThresholds likert;
    bool likert_audit = false;
    DedupOptions dedup;
    SplitSpec split;
    EncoderSpec encoder;
    TrainConfig train;
    std::map<std::string, LevelStats> expected_raw_stats;    // optional reconciliation blocks
    std::map<std::string, LevelStats> expected_clean_stats;
    nlohmann::json raw;  // snapshot for run manifests
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& field, const std::string& message)
{
    throw ConfigError("config field '" + field + "': " + message);
}

template <class T>
T get_field(const nlohmann::json& j, const std::string& parent, const char* name)
{
    if (!j.contains(name)) {
        config_fail(parent + "." + name, "missing");
    }
    try {
        return j.at(name).get<T>();
    } catch (const nlohmann::json::exception&) {
        config_fail(parent + "." + name, "wrong type");
    }
}

template <class T>
T get_field_or(const nlohmann::json& j, const std::string& parent, const char* name, T fallback)
{
    if (!j.contains(name) || j.at(name).is_null()) {
        return fallback;
    }
    try {
        return j.at(name).get<T>();
    } catch (const nlohmann::json::exception&) {
        config_fail(parent + "." + name, "wrong type");
    }
}

inline LevelStats stats_from_json(const nlohmann::json& j, const std::string& field)
{
    LevelStats stats;
    stats.examples = get_field<std::uint64_t>(j, field, "examples");
    stats.positive = get_field<std::uint64_t>(j, field, "positive");
    stats.negative = get_field<std::uint64_t>(j, field, "negative");
    stats.neutral = get_field<std::uint64_t>(j, field, "neutral");
    return stats;
}

inline ColumnMapping columns_from_json(const nlohmann::json& j, const std::string& field)
{
    ColumnMapping mapping;
    if (!j.contains("id")) {
        config_fail(field + ".id", "missing");
    }
    const auto& id = j.at("id");
    if (id.is_string()) {
        mapping.id_columns.push_back(id.get<std::string>());
    } else if (id.is_array()) {
        for (const auto& entry : id) {
            mapping.id_columns.push_back(entry.get<std::string>());
        }
    } else {
        config_fail(field + ".id", "must be a column name or a list of column names");
    }
    mapping.text_column = get_field<std::string>(j, field, "text");
    mapping.label_column = get_field<std::string>(j, field, "label");
    if (j.contains("mean_score") && !j.at("mean_score").is_null()) {
        mapping.mean_score_column = j.at("mean_score").get<std::string>();
    }
    const auto delim = get_field_or<std::string>(j, field, "delimiter", "");
    if (delim == "\t" || delim == "tab") {
        mapping.delimiter = '\t';
    } else if (delim == "," || delim == "comma") {
        mapping.delimiter = ',';
    } else if (delim.empty() || delim == "auto") {
        mapping.delimiter = '\0';
    } else {
        config_fail(field + ".delimiter", "must be tab, comma, or auto");
    }
    return mapping;
}

}  // namespace detail

inline const std::vector<std::string>& known_pool_names()
{
    static const std::vector<std::string> names = {"sl_doc", "sl_para", "sl_sent", "hr_doc"};
    return names;
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
    }

    RunConfig config;
    config.config_path = path;
    config.base_dir = path.has_parent_path() ? path.parent_path() : ".";
    config.raw = j;

    const auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : config.base_dir / fp;
    };

    config.out_dir = resolve(detail::get_field_or<std::string>(j, "", "out_dir", "out"));

    if (!j.contains("corpora") || !j.at("corpora").is_object() || j.at("corpora").empty()) {
        detail::config_fail("corpora", "must be a non-empty object");
    }
    for (const auto& [name, entry] : j.at("corpora").items()) {
        const std::string field = "corpora." + name;
        CorpusEntry corpus;
        corpus.path = resolve(detail::get_field<std::string>(entry, field, "path"));
        const auto language = parse_language(detail::get_field<std::string>(entry, field, "language"));
        if (!language) detail::config_fail(field + ".language", "must be sl or hr");
        corpus.language = *language;
        const auto level = parse_granularity(detail::get_field<std::string>(entry, field, "level"));
        if (!level) detail::config_fail(field + ".level", "must be document, paragraph, or sentence");
        corpus.level = *level;
        if (corpus.language == Language::hr && corpus.level != Granularity::document) {
            detail::config_fail(field + ".level",
                                "the Croatian corpus has document-level annotations only");
        }
        if (!entry.contains("columns")) detail::config_fail(field + ".columns", "missing");
        corpus.columns = detail::columns_from_json(entry.at("columns"), field + ".columns");
        const std::string expected_name = pool_name(corpus.language, corpus.level);
        if (name != expected_name) {
            detail::config_fail(field, "pool must be named '" + expected_name
                                           + "' for this language/level");
        }
        config.corpora.emplace(name, std::move(corpus));
    }

    if (j.contains("likert")) {
        const auto& likert = j.at("likert");
        config.likert.low = detail::get_field_or<double>(likert, "likert", "low", 2.4);
        config.likert.high = detail::get_field_or<double>(likert, "likert", "high", 3.6);
        config.likert_audit = detail::get_field_or<bool>(likert, "likert", "audit", false);
        if (!(config.likert.low < config.likert.high)) {
            detail::config_fail("likert", "low must be below high");
        }
    }
    if (j.contains("dedup")) {
        config.dedup.case_fold =
            detail::get_field_or<bool>(j.at("dedup"), "dedup", "case_fold", false);
    }
    if (j.contains("split")) {
        const auto& split = j.at("split");
        config.split.test_fraction =
            detail::get_field_or<double>(split, "split", "test_fraction", 0.20);
        config.split.dev_fraction_of_train =
            detail::get_field_or<double>(split, "split", "dev_fraction_of_train", 0.10);
        config.split.seed = detail::get_field_or<std::uint64_t>(split, "split", "seed", 0);
        if (!(config.split.test_fraction > 0.0 && config.split.test_fraction < 1.0)) {
            detail::config_fail("split.test_fraction", "must lie in (0,1)");
        }
        if (!(config.split.dev_fraction_of_train >= 0.0
              && config.split.dev_fraction_of_train < 1.0)) {
            detail::config_fail("split.dev_fraction_of_train", "must lie in [0,1)");
        }
    }
    if (j.contains("encoder")) {
        const auto& enc = j.at("encoder");
        const auto kind = parse_encoder_kind(
            detail::get_field_or<std::string>(enc, "encoder", "kind", "toy_deterministic"));
        if (!kind) detail::config_fail("encoder.kind", "must be toy_deterministic or pretrained_adapter");
        config.encoder.kind = *kind;
        config.encoder.hidden_dim =
            detail::get_field_or<std::size_t>(enc, "encoder", "hidden_dim", 64);
        config.encoder.max_tokens =
            detail::get_field_or<std::size_t>(enc, "encoder", "max_tokens", 512);
        const auto pooling = parse_pooling(
            detail::get_field_or<std::string>(enc, "encoder", "pooling", "first_token"));
        if (!pooling) detail::config_fail("encoder.pooling", "must be first_token or mean");
        config.encoder.pooling = *pooling;
        config.encoder.asset_ref =
            detail::get_field_or<std::string>(enc, "encoder", "asset_ref", "");
        const auto asset_dir = detail::get_field_or<std::string>(enc, "encoder", "asset_dir", "");
        if (!asset_dir.empty()) config.encoder.asset_dir = resolve(asset_dir);
        if (config.encoder.hidden_dim == 0) detail::config_fail("encoder.hidden_dim", "must be positive");
        if (config.encoder.max_tokens == 0) detail::config_fail("encoder.max_tokens", "must be positive");
    }
    if (j.contains("train")) {
        const auto& train = j.at("train");
        config.train.learning_rate =
            detail::get_field_or<double>(train, "train", "learning_rate", 2e-5);
        config.train.batch_size = detail::get_field_or<int>(train, "train", "batch_size", 32);
        if (train.contains("epochs") && !train.at("epochs").is_null()) {
            config.train.epochs = train.at("epochs").get<int>();
        }
        config.train.seed = detail::get_field_or<std::uint64_t>(train, "train", "seed", 0);
        config.train.dropout_rate = detail::get_field_or<double>(train, "train", "dropout", 0.3);
        config.train.adam_beta1 = detail::get_field_or<double>(train, "train", "adam_beta1", 0.9);
        config.train.adam_beta2 = detail::get_field_or<double>(train, "train", "adam_beta2", 0.999);
        config.train.adam_epsilon =
            detail::get_field_or<double>(train, "train", "adam_epsilon", 1e-8);
        const auto selection = parse_selection_metric(detail::get_field_or<std::string>(
            train, "train", "selection", "document_macro_f1"));
        if (!selection) {
            detail::config_fail("train.selection", "must be document_macro_f1 or mean_macro_f1");
        }
        config.train.selection = *selection;
        try {
            config.train.validate();
        } catch (const ConfigError& e) {
            detail::config_fail("train", e.what());
        }
    }

    for (const auto* block : {"expected_raw_stats", "expected_clean_stats"}) {
        if (!j.contains(block)) continue;
        auto& target = std::string(block) == "expected_raw_stats" ? config.expected_raw_stats
                                                                  : config.expected_clean_stats;
        for (const auto& [name, stats] : j.at(block).items()) {
            target.emplace(name, detail::stats_from_json(stats, std::string(block) + "." + name));
        }
    }
    return config;
}

}  // namespace sentmtl

#endif  // SENTMTL_CONFIG_HPP
