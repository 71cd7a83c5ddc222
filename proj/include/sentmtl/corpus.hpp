#ifndef SENTMTL_CORPUS_HPP
#define SENTMTL_CORPUS_HPP

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sentmtl/errors.hpp"
#include "sentmtl/io.hpp"
#include "sentmtl/text.hpp"

namespace sentmtl {

// Label order is fixed (negative < neutral < positive). Tie-breaks and the
// monotonicity of the Likert mapping are defined against this order.
enum class SentimentLabel : int { negative = 0, neutral = 1, positive = 2 };

inline constexpr std::array<SentimentLabel, 3> kAllLabels = {
    SentimentLabel::negative, SentimentLabel::neutral, SentimentLabel::positive};

inline const char* to_string(SentimentLabel label)
{
    switch (label) {
        case SentimentLabel::negative: return "negative";
        case SentimentLabel::neutral: return "neutral";
        case SentimentLabel::positive: return "positive";
    }
    return "?";
}

inline std::optional<SentimentLabel> parse_label(std::string_view token)
{
    const std::string t = text::lower_ascii(text::trim(token));
    if (t == "negative") return SentimentLabel::negative;
    if (t == "neutral") return SentimentLabel::neutral;
    if (t == "positive") return SentimentLabel::positive;
    return std::nullopt;
}

enum class Granularity : int { document = 0, paragraph = 1, sentence = 2 };

inline constexpr std::array<Granularity, 3> kAllGranularities = {
    Granularity::document, Granularity::paragraph, Granularity::sentence};

inline const char* to_string(Granularity level)
{
    switch (level) {
        case Granularity::document: return "document";
        case Granularity::paragraph: return "paragraph";
        case Granularity::sentence: return "sentence";
    }
    return "?";
}

inline std::optional<Granularity> parse_granularity(std::string_view token)
{
    const std::string t = text::lower_ascii(text::trim(token));
    if (t == "document" || t == "doc") return Granularity::document;
    if (t == "paragraph" || t == "para") return Granularity::paragraph;
    if (t == "sentence" || t == "sent") return Granularity::sentence;
    return std::nullopt;
}

enum class Language : int { sl = 0, hr = 1 };

inline const char* to_string(Language lang)
{
    return lang == Language::sl ? "sl" : "hr";
}

inline std::optional<Language> parse_language(std::string_view token)
{
    const std::string t = text::lower_ascii(text::trim(token));
    if (t == "sl") return Language::sl;
    if (t == "hr") return Language::hr;
    return std::nullopt;
}

/// Canonical pool name for a (language, level) pair: sl_doc, sl_para,
/// sl_sent, hr_doc. These key the config, split manifests, and test sets.
inline std::string pool_name(Language language, Granularity level)
{
    std::string name = to_string(language);
    name.push_back('_');
    switch (level) {
        case Granularity::document: name += "doc"; break;
        case Granularity::paragraph: name += "para"; break;
        case Granularity::sentence: name += "sent"; break;
    }
    return name;
}

/// One annotated text unit. The Croatian corpus only provides document-level
/// annotations, so language = hr implies level = document; load_corpus and
/// the config loader both enforce that.
struct LabeledInstance {
    std::string id;
    std::string text;
    Language language = Language::sl;
    Granularity level = Granularity::document;
    SentimentLabel label = SentimentLabel::neutral;
    std::optional<double> mean_score;  // 1..5 Likert average when the source has it

    friend bool operator==(const LabeledInstance&, const LabeledInstance&) = default;
};

struct LevelStats {
    std::uint64_t examples = 0;
    std::uint64_t positive = 0;
    std::uint64_t negative = 0;
    std::uint64_t neutral = 0;

    std::uint64_t of(SentimentLabel label) const
    {
        switch (label) {
            case SentimentLabel::negative: return negative;
            case SentimentLabel::neutral: return neutral;
            case SentimentLabel::positive: return positive;
        }
        return 0;
    }

    friend bool operator==(const LevelStats&, const LevelStats&) = default;
};

/// Names the columns of a delimited corpus file. `id_columns` may list more
/// than one column; the values are joined with ':' to form the instance id
/// (the paragraph/sentence files identify rows by document id plus an index).
struct ColumnMapping {
    std::vector<std::string> id_columns;
    std::string text_column;
    std::string label_column;
    std::optional<std::string> mean_score_column;
    char delimiter = '\0';  // 0 = auto-detect from the header line
};

/// Likert thresholds. The corpora's conventional cut-points are used as
/// defaults; both are plain configuration.
struct LikertThresholds {
    double low = 2.4;
    double high = 3.6;
};

/// Maps a 1..5 Likert average onto the three classes: below `low` is
/// negative, above `high` is positive, the band in between is neutral.
inline SentimentLabel map_likert(double mean_score, double low_threshold = 2.4,
                                 double high_threshold = 3.6)
{
    if (!(low_threshold < high_threshold)) {
        throw ConfigError("likert thresholds must satisfy low < high");
    }
    if (!(mean_score >= 1.0 && mean_score <= 5.0)) {
        throw DomainError("likert mean score outside [1,5]: " + std::to_string(mean_score));
    }
    if (mean_score < low_threshold) return SentimentLabel::negative;
    if (mean_score > high_threshold) return SentimentLabel::positive;
    return SentimentLabel::neutral;
}

inline SentimentLabel map_likert(double mean_score, const LikertThresholds& t)
{
    return map_likert(mean_score, t.low, t.high);
}

inline LevelStats dataset_stats(std::span<const LabeledInstance> instances)
{
    LevelStats stats;
    stats.examples = instances.size();
    for (const auto& inst : instances) {
        switch (inst.label) {
            case SentimentLabel::positive: ++stats.positive; break;
            case SentimentLabel::negative: ++stats.negative; break;
            case SentimentLabel::neutral: ++stats.neutral; break;
        }
    }
    return stats;
}

namespace detail {

inline std::optional<double> parse_double(std::string_view token)
{
    const std::string_view trimmed = text::trim(token);
    if (trimmed.empty()) return std::nullopt;
    double value = 0.0;
    const auto* first = trimmed.data();
    const auto* last = trimmed.data() + trimmed.size();
    const auto result = std::from_chars(first, last, value);
    if (result.ec != std::errc() || result.ptr != last) return std::nullopt;
    return value;
}

inline std::size_t require_column(const std::vector<std::string>& header,
                                  const std::string& name,
                                  const std::filesystem::path& path)
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (text::trim(header[i]) == name) return i;
    }
    throw FormatError("column '" + name + "' not found in header of " + path.string());
}

}  // namespace detail

/// Parses one corpus file into instances, one per data row, preserving file
/// order. Labels are matched case-insensitively against the three classes.
/// No cleaning happens here; empty or duplicate rows pass through untouched.
inline std::vector<LabeledInstance> load_corpus(const std::filesystem::path& path,
                                                Language language, Granularity level,
                                                const ColumnMapping& mapping)
{
    if (language == Language::hr && level != Granularity::document) {
        throw ConfigError("the Croatian corpus has document-level annotations only; "
                          "got level '" + std::string(to_string(level)) + "'");
    }
    if (mapping.id_columns.empty() || mapping.text_column.empty() || mapping.label_column.empty()) {
        throw ConfigError("column mapping must name id, text, and label columns");
    }

    std::vector<LabeledInstance> instances;
    std::vector<std::size_t> id_idx;
    std::size_t text_idx = 0;
    std::size_t label_idx = 0;
    std::optional<std::size_t> mean_idx;

    // Rows can be shorter than the header when trailing fields are empty.
    const auto field_at = [](const io::DelimitedRow& row, std::size_t idx) -> std::string_view {
        return idx < row.fields.size() ? std::string_view(row.fields[idx]) : std::string_view();
    };

    io::read_delimited(
        path, mapping.delimiter,
        [&](const std::vector<std::string>& header) {
            for (const auto& name : mapping.id_columns) {
                id_idx.push_back(detail::require_column(header, name, path));
            }
            text_idx = detail::require_column(header, mapping.text_column, path);
            label_idx = detail::require_column(header, mapping.label_column, path);
            if (mapping.mean_score_column) {
                mean_idx = detail::require_column(header, *mapping.mean_score_column, path);
            }
        },
        [&](const io::DelimitedRow& row) {
            LabeledInstance inst;
            inst.language = language;
            inst.level = level;
            for (std::size_t i = 0; i < id_idx.size(); ++i) {
                if (i > 0) inst.id.push_back(':');
                inst.id += std::string(text::trim(field_at(row, id_idx[i])));
            }
            inst.text = std::string(field_at(row, text_idx));
            const std::string_view label_token = field_at(row, label_idx);
            const auto label = parse_label(label_token);
            if (!label) {
                throw RowError("row " + std::to_string(row.line_number) + " of "
                               + path.string() + ": unparseable label '"
                               + std::string(label_token) + "'");
            }
            inst.label = *label;
            if (mean_idx) {
                const std::string_view token = field_at(row, *mean_idx);
                if (!text::trim(token).empty()) {
                    const auto value = detail::parse_double(token);
                    if (!value) {
                        throw RowError("row " + std::to_string(row.line_number) + " of "
                                       + path.string() + ": unparseable mean score '"
                                       + std::string(token) + "'");
                    }
                    if (!(*value >= 1.0 && *value <= 5.0)) {
                        throw RowError("row " + std::to_string(row.line_number) + " of "
                                       + path.string() + ": mean score outside [1,5]");
                    }
                    inst.mean_score = *value;
                }
            }
            instances.push_back(std::move(inst));
        });

    return instances;
}

/// Writes instances in the toolkit's own export layout (id, text, label,
/// mean_score); export_mapping() loads such a file back. Tabs and newlines
/// inside fields are normalized to single spaces, which is how the corpora
/// themselves are distributed; for any text free of them the round trip
/// reproduces an equal instance list.
inline const ColumnMapping& export_mapping()
{
    static const ColumnMapping mapping{
        {"id"}, "text", "label", std::string("mean_score"), '\t'};
    return mapping;
}

inline void save_corpus(const std::filesystem::path& path,
                        std::span<const LabeledInstance> instances)
{
    const auto sanitize = [](std::string field) {
        for (char& c : field) {
            if (c == '\t' || c == '\n' || c == '\r') c = ' ';
        }
        return field;
    };
    io::DelimitedWriter writer(path, '\t', {"id", "text", "label", "mean_score"});
    char buf[32];
    for (const auto& inst : instances) {
        std::string mean;
        if (inst.mean_score) {
            // shortest round-trip formatting keeps exports byte-stable
            const auto res = std::to_chars(buf, buf + sizeof(buf), *inst.mean_score);
            mean.assign(buf, res.ptr);
        }
        writer.write_row({sanitize(inst.id), sanitize(inst.text), to_string(inst.label), mean});
    }
}

struct LikertAuditRecord {
    std::string id;
    SentimentLabel stored;
    SentimentLabel derived;
};

/// Audit mode: re-derives labels from the stored Likert averages and reports
/// every disagreement with the final labels shipped in the file. The final
/// labels stay authoritative; this only surfaces mismatches.
inline std::vector<LikertAuditRecord> audit_likert(std::span<const LabeledInstance> instances,
                                                   const LikertThresholds& thresholds = {})
{
    std::vector<LikertAuditRecord> mismatches;
    for (const auto& inst : instances) {
        if (!inst.mean_score) continue;
        const SentimentLabel derived = map_likert(*inst.mean_score, thresholds);
        if (derived != inst.label) {
            mismatches.push_back({inst.id, inst.label, derived});
        }
    }
    return mismatches;
}

}  // namespace sentmtl

#endif  // SENTMTL_CORPUS_HPP
