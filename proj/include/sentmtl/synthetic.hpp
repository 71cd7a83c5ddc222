#ifndef SENTMTL_SYNTHETIC_HPP
#define SENTMTL_SYNTHETIC_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sentmtl/corpus.hpp"
#include "sentmtl/errors.hpp"
#include "sentmtl/io.hpp"
#include "sentmtl/rng.hpp"

// Offline stand-ins for the corpora: a small linearly separable fixture for
// training tests, and a statistics-driven replica whose raw pools reduce to
// prescribed post-cleaning counts under the cleaning pipeline. Both are
// deterministic in their seeds.

namespace sentmtl::synthetic {

/// Raw and cleaned per-label counts for one generated pool. The generator
/// plants whitespace-only rows (always neutral, matching the real corpora)
/// and exact duplicates so that drop_empty + deduplicate turns `raw` into
/// `clean` exactly. Duplicates copy an instance of the same label.
struct PoolSpec {
    Language language = Language::sl;
    Granularity level = Granularity::document;
    LevelStats raw;
    LevelStats clean;
    bool with_mean_score = true;
};

namespace detail {

inline const std::vector<std::string>& word_bank(SentimentLabel label)
{
    static const std::vector<std::string> positive = {
        "odlično", "izvrsno",  "sjajno",  "pohvalno", "uspjeh",
        "rast",         "dobitak",  "veselje", "napredak", "pobjeda",
    };
    static const std::vector<std::string> negative = {
        "katastrofa", "loše", "pad",     "gubitak", "kriza",
        "propast",    "tužno", "šteta", "problem", "poraz",
    };
    static const std::vector<std::string> neutral = {
        "izvješće", "najava", "pregled", "podaci", "sjednica",
        "raspored",           "objava", "mjere",   "datum",  "popis",
    };
    switch (label) {
        case SentimentLabel::positive: return positive;
        case SentimentLabel::negative: return negative;
        case SentimentLabel::neutral: return neutral;
    }
    return neutral;
}

inline const std::vector<std::string>& filler_bank()
{
    static const std::vector<std::string> filler = {
        "danas", "vlada", "grad", "tvrtka", "trg", "cijene", "ljudi", "zemlja",
    };
    return filler;
}

/// Base-26 serial word; distinct serials guarantee distinct texts.
inline std::string serial_word(std::uint64_t n)
{
    std::string out = "q";
    do {
        out.push_back(static_cast<char>('a' + n % 26));
        n /= 26;
    } while (n != 0);
    return out;
}

inline double mean_score_for(SentimentLabel label, Rng& rng)
{
    switch (label) {
        case SentimentLabel::negative: return rng.uniform(1.0, 2.35);
        case SentimentLabel::neutral: return rng.uniform(2.45, 3.55);
        case SentimentLabel::positive: return rng.uniform(3.65, 5.0);
    }
    return 3.0;
}

inline std::string class_flavored_text(SentimentLabel label, std::uint64_t serial, Rng& rng,
                                       std::size_t words)
{
    const auto& bank = word_bank(label);
    const auto& filler = filler_bank();
    std::string text = serial_word(serial);
    for (std::size_t w = 0; w < words; ++w) {
        text.push_back(' ');
        text += bank[rng.bounded(bank.size())];
    }
    text.push_back(' ');
    text += filler[rng.bounded(filler.size())];
    return text;
}

}  // namespace detail

/// Generates one raw pool per the spec. Cleaning invariants by construction:
/// clean counts per label survive, every planted duplicate shares the label
/// of its source, planted empties are neutral, and the whole pool is
/// shuffled afterwards (a duplicate landing before its source changes which
/// copy survives, never the surviving count per label).
inline std::vector<LabeledInstance> generate_pool(const PoolSpec& spec, std::uint64_t seed)
{
    const std::string name = pool_name(spec.language, spec.level);
    for (const SentimentLabel label : kAllLabels) {
        if (spec.raw.of(label) < spec.clean.of(label)) {
            throw ConfigError("pool " + name + ": clean count exceeds raw count for label "
                              + to_string(label));
        }
    }
    const std::uint64_t neutral_drop = spec.raw.neutral - spec.clean.neutral;
    const std::uint64_t empties = neutral_drop / 3;  // remainder becomes duplicates

    Rng rng(mix_seed(seed, "pool:" + name));
    std::vector<LabeledInstance> instances;
    instances.reserve(spec.raw.examples);

    std::array<std::vector<std::size_t>, 3> kept_index_by_label;
    std::uint64_t serial = 0;
    for (const SentimentLabel label : kAllLabels) {
        const auto l = static_cast<std::size_t>(label);
        for (std::uint64_t i = 0; i < spec.clean.of(label); ++i) {
            LabeledInstance inst;
            inst.language = spec.language;
            inst.level = spec.level;
            inst.label = label;
            inst.text = detail::class_flavored_text(label, serial++, rng, 4);
            if (spec.with_mean_score) {
                inst.mean_score = detail::mean_score_for(label, rng);
            }
            kept_index_by_label[l].push_back(instances.size());
            instances.push_back(std::move(inst));
        }
    }

    for (const SentimentLabel label : kAllLabels) {
        const auto l = static_cast<std::size_t>(label);
        std::uint64_t duplicates = spec.raw.of(label) - spec.clean.of(label);
        if (label == SentimentLabel::neutral) {
            duplicates -= empties;
        }
        for (std::uint64_t i = 0; i < duplicates; ++i) {
            const auto& sources = kept_index_by_label[l];
            if (sources.empty()) {
                throw ConfigError("pool " + name + ": cannot plant a duplicate for label "
                                  + to_string(label) + " with no kept instance");
            }
            LabeledInstance copy = instances[sources[rng.bounded(sources.size())]];
            instances.push_back(std::move(copy));
        }
    }

    // delimiter-safe blanks; the NBSP exercises unicode-aware trimming
    static const std::array<const char*, 3> blank_texts = {"", " ", " "};
    for (std::uint64_t i = 0; i < empties; ++i) {
        LabeledInstance inst;
        inst.language = spec.language;
        inst.level = spec.level;
        inst.label = SentimentLabel::neutral;
        inst.text = blank_texts[i % blank_texts.size()];
        instances.push_back(std::move(inst));
    }

    rng.shuffle(instances);

    // ids are assigned after the shuffle so they follow file order; the
    // paragraph/sentence pools get composite document:part ids
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (spec.level == Granularity::document) {
            instances[i].id = "n" + std::to_string(i + 1);
        } else {
            instances[i].id = "n" + std::to_string(i / 10 + 1) + ":" + std::to_string(i % 10 + 1);
        }
    }
    return instances;
}

/// Writes a pool in the corpus layout the column-mapping examples expect:
/// documents as (nid, content, [avg_sentiment,] sentiment), paragraph and
/// sentence pools with an extra pid column carrying the sub-id.
inline void write_pool_file(const std::filesystem::path& path,
                            std::span<const LabeledInstance> instances,
                            bool with_mean_score)
{
    const bool composite = !instances.empty() && instances.front().level != Granularity::document;
    std::vector<std::string> header = {"nid"};
    if (composite) header.emplace_back("pid");
    header.emplace_back("content");
    if (with_mean_score) header.emplace_back("avg_sentiment");
    header.emplace_back("sentiment");

    io::DelimitedWriter writer(path, '\t', header);
    char buf[32];
    for (const auto& inst : instances) {
        std::vector<std::string> row;
        if (composite) {
            const auto colon = inst.id.find(':');
            row.push_back(inst.id.substr(0, colon));
            row.push_back(colon == std::string::npos ? "" : inst.id.substr(colon + 1));
        } else {
            row.push_back(inst.id);
        }
        row.push_back(inst.text);
        if (with_mean_score) {
            std::string mean;
            if (inst.mean_score) {
                const auto res = std::to_chars(buf, buf + sizeof(buf), *inst.mean_score);
                mean.assign(buf, res.ptr);
            }
            row.push_back(mean);
        }
        row.emplace_back(to_string(inst.label));
        writer.write_row(row);
    }
}

inline ColumnMapping mapping_for(Granularity level, bool with_mean_score)
{
    ColumnMapping mapping;
    mapping.id_columns = level == Granularity::document
                             ? std::vector<std::string>{"nid"}
                             : std::vector<std::string>{"nid", "pid"};
    mapping.text_column = "content";
    mapping.label_column = "sentiment";
    if (with_mean_score) mapping.mean_score_column = "avg_sentiment";
    mapping.delimiter = '\t';
    return mapping;
}

// --- the shipped fixture -------------------------------------------------

inline constexpr std::uint64_t kFixtureSeed = 2024;

/// The 300-row fixture corpus: class-separable texts so a linear model on
/// hashed n-gram features can fit it, plus a few planted empties and
/// duplicates per pool so the cleaning stage has real work to do.
///
///   pool     raw              clean
///   hr_doc   120 (39/39/42)   115 (38/38/39)
///   sl_doc    60 (20/20/20)    57 (19/19/19)
///   sl_para   60 (20/20/20)    57 (19/19/19)
///   sl_sent   60 (20/20/20)    57 (19/19/19)
inline std::vector<PoolSpec> fixture_pool_specs()
{
    const auto stats = [](std::uint64_t e, std::uint64_t p, std::uint64_t n, std::uint64_t u) {
        return LevelStats{e, p, n, u};
    };
    return {
        {Language::hr, Granularity::document, stats(120, 39, 39, 42), stats(115, 38, 38, 39),
         false},
        {Language::sl, Granularity::document, stats(60, 20, 20, 20), stats(57, 19, 19, 19), true},
        {Language::sl, Granularity::paragraph, stats(60, 20, 20, 20), stats(57, 19, 19, 19), true},
        {Language::sl, Granularity::sentence, stats(60, 20, 20, 20), stats(57, 19, 19, 19), true},
    };
}

inline std::map<std::string, std::vector<LabeledInstance>> generate_fixture(
    std::uint64_t seed = kFixtureSeed)
{
    std::map<std::string, std::vector<LabeledInstance>> pools;
    for (const PoolSpec& spec : fixture_pool_specs()) {
        pools[pool_name(spec.language, spec.level)] = generate_pool(spec, seed);
    }
    return pools;
}

inline void write_fixture(const std::filesystem::path& dir, std::uint64_t seed = kFixtureSeed)
{
    std::filesystem::create_directories(dir);
    for (const PoolSpec& spec : fixture_pool_specs()) {
        const auto pool = generate_pool(spec, seed);
        write_pool_file(dir / (pool_name(spec.language, spec.level) + ".tsv"), pool,
                        spec.with_mean_score);
    }
}

}  // namespace sentmtl::synthetic

#endif  // SENTMTL_SYNTHETIC_HPP
