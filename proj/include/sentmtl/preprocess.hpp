#ifndef SENTMTL_PREPROCESS_HPP
#define SENTMTL_PREPROCESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sentmtl/corpus.hpp"
#include "sentmtl/errors.hpp"
#include "sentmtl/io.hpp"
#include "sentmtl/rng.hpp"
#include "sentmtl/text.hpp"

namespace sentmtl {

/// Removes every instance whose text is empty after whitespace trimming.
/// Label-independent: the corpora's empty rows all carry the neutral tag,
/// but nothing here relies on that. Order is preserved; idempotent.
inline std::vector<LabeledInstance> drop_empty(std::span<const LabeledInstance> instances)
{
    std::vector<LabeledInstance> kept;
    kept.reserve(instances.size());
    for (const auto& inst : instances) {
        if (!text::is_blank(inst.text)) {
            kept.push_back(inst);
        }
    }
    return kept;
}

struct DedupOptions {
    bool case_fold = false;  // ASCII-only fold; exact codepoint match otherwise
};

struct DedupRemoval {
    std::string id;
    std::string kept_id;  // first occurrence that shadows this one
    std::string reason;
};

inline constexpr const char* kDedupReason =
    "duplicate content removed to prevent leakage across train/dev/test splits";

/// Keeps the first instance per distinct trimmed text, in list order.
/// The key is the exact codepoint sequence of the trimmed text (optionally
/// ASCII-case-folded); removals are reported through `removals` when given.
/// Idempotent, and never removes the first occurrence of any text.
inline std::vector<LabeledInstance> deduplicate(std::span<const LabeledInstance> instances,
                                                const DedupOptions& options = {},
                                                std::vector<DedupRemoval>* removals = nullptr)
{
    std::vector<LabeledInstance> kept;
    kept.reserve(instances.size());
    std::unordered_map<std::string, std::size_t> first_by_text;
    first_by_text.reserve(instances.size() * 2);
    for (const auto& inst : instances) {
        std::string key(text::trim(inst.text));
        if (options.case_fold) {
            key = text::lower_ascii(key);
        }
        const auto [it, inserted] = first_by_text.emplace(std::move(key), kept.size());
        if (inserted) {
            kept.push_back(inst);
        } else if (removals != nullptr) {
            removals->push_back({inst.id, kept[it->second].id, kDedupReason});
        }
    }
    return kept;
}

/// The cleaning pipeline as applied to every pool: empty-drop, then
/// content dedup. The order matters; running dedup first would collapse
/// all empty rows into one survivor instead of dropping them.
inline std::vector<LabeledInstance> clean_pipeline(std::span<const LabeledInstance> instances,
                                                   const DedupOptions& options = {},
                                                   std::vector<DedupRemoval>* removals = nullptr)
{
    return deduplicate(drop_empty(instances), options, removals);
}

struct SplitSpec {
    double test_fraction = 0.20;
    double dev_fraction_of_train = 0.10;
    std::uint64_t seed = 0;
};

struct DatasetSplit {
    std::vector<LabeledInstance> train;
    std::vector<LabeledInstance> dev;
    std::vector<LabeledInstance> test;
};

namespace detail {

/// Largest-remainder apportionment: per-label quotas round to floor, then
/// the remaining slots go to the largest fractional remainders. Ties break
/// on the fixed label order, so the result is reproducible from (counts,
/// fraction) alone.
inline std::array<std::size_t, 3> apportion(const std::array<std::size_t, 3>& counts,
                                            double fraction)
{
    const std::size_t total = counts[0] + counts[1] + counts[2];
    const auto target = static_cast<std::size_t>(
        std::llround(static_cast<double>(total) * fraction));
    std::array<std::size_t, 3> out{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double quota = static_cast<double>(counts[i]) * fraction;
        out[i] = static_cast<std::size_t>(quota);
        out[i] = std::min(out[i], counts[i]);
        remainder[i] = quota - static_cast<double>(out[i]);
        assigned += out[i];
    }
    std::array<std::size_t, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainder[a] > remainder[b];
    });
    std::size_t i = 0;
    while (assigned < target && i < 3) {
        const std::size_t label = order[i++];
        if (out[label] < counts[label]) {
            ++out[label];
            ++assigned;
        }
    }
    // target can exceed what floors+remainders hand out when a label is
    // exhausted; keep pulling from labels with headroom in fixed order
    for (std::size_t label = 0; assigned < target && label < 3; ++label) {
        while (assigned < target && out[label] < counts[label]) {
            ++out[label];
            ++assigned;
        }
    }
    return out;
}

struct StratifiedDraw {
    std::vector<std::size_t> taken;      // indices drawn into the carved part
    std::vector<std::size_t> remaining;  // indices left behind, input order
};

/// Carves `fraction` of `indices` out, stratified by label. Per-label
/// membership is decided by a seeded shuffle of that label's indices; both
/// outputs are restored to input order so downstream shuffles own all
/// ordering decisions.
inline StratifiedDraw stratified_carve(std::span<const LabeledInstance> instances,
                                       const std::vector<std::size_t>& indices,
                                       double fraction, std::uint64_t seed,
                                       std::string_view stage)
{
    std::array<std::vector<std::size_t>, 3> by_label;
    for (const std::size_t idx : indices) {
        by_label[static_cast<std::size_t>(instances[idx].label)].push_back(idx);
    }
    const std::array<std::size_t, 3> counts = {
        by_label[0].size(), by_label[1].size(), by_label[2].size()};
    const std::array<std::size_t, 3> take = apportion(counts, fraction);

    StratifiedDraw draw;
    std::vector<char> in_part(instances.size(), 0);
    for (const SentimentLabel label : kAllLabels) {
        const auto l = static_cast<std::size_t>(label);
        auto& pool = by_label[l];
        Rng rng(mix_seed(seed, std::string(stage) + ":" + to_string(label)));
        rng.shuffle(pool);
        for (std::size_t i = 0; i < take[l]; ++i) {
            in_part[pool[i]] = 1;
        }
    }
    for (const std::size_t idx : indices) {
        (in_part[idx] ? draw.taken : draw.remaining).push_back(idx);
    }
    return draw;
}

}  // namespace detail

/// Stratified train/dev/test split. Test takes `test_fraction` of the whole
/// set, apportioned per label by largest remainder; dev then takes
/// `dev_fraction_of_train` of what remains, the same way. Deterministic for
/// a given (instances order, spec.seed); the three parts are disjoint and
/// jointly exhaust the input.
inline DatasetSplit stratified_split(std::span<const LabeledInstance> instances,
                                     const SplitSpec& spec)
{
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
        throw ConfigError("test_fraction must lie in (0,1)");
    }
    if (!(spec.dev_fraction_of_train >= 0.0 && spec.dev_fraction_of_train < 1.0)) {
        throw ConfigError("dev_fraction_of_train must lie in [0,1)");
    }
    const LevelStats stats = dataset_stats(instances);
    for (const SentimentLabel label : kAllLabels) {
        if (stats.of(label) == 0) {
            throw StratificationError(std::string("cannot stratify: label '")
                                      + to_string(label) + "' has zero instances");
        }
    }

    std::vector<std::size_t> all(instances.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    const auto test_draw =
        detail::stratified_carve(instances, all, spec.test_fraction, spec.seed, "test");
    const auto dev_draw = detail::stratified_carve(instances, test_draw.remaining,
                                                   spec.dev_fraction_of_train, spec.seed, "dev");

    DatasetSplit split;
    split.test.reserve(test_draw.taken.size());
    for (const std::size_t idx : test_draw.taken) split.test.push_back(instances[idx]);
    split.dev.reserve(dev_draw.taken.size());
    for (const std::size_t idx : dev_draw.taken) split.dev.push_back(instances[idx]);
    split.train.reserve(dev_draw.remaining.size());
    for (const std::size_t idx : dev_draw.remaining) split.train.push_back(instances[idx]);
    return split;
}

/// The combined size-proportional population: per-task training pools plus
/// their sizes, which drive proportional task sampling during training.
struct TaskCollection {
    std::map<Granularity, std::vector<LabeledInstance>> pools;
    std::map<Granularity, std::size_t> sizes;

    std::size_t total_size() const
    {
        std::size_t total = 0;
        for (const auto& [task, size] : sizes) total += size;
        return total;
    }
};

/// Assembles training pools keyed by task. Inputs carry whole splits; only
/// the train parts enter the collection. Duplicate task keys are a
/// configuration error, as is an empty mapping.
inline TaskCollection build_collection(
    const std::vector<std::pair<Granularity, DatasetSplit>>& splits)
{
    if (splits.empty()) {
        throw ConfigError("cannot build a task collection from an empty mapping");
    }
    TaskCollection collection;
    for (const auto& [task, split] : splits) {
        if (collection.pools.count(task) != 0) {
            throw ConfigError(std::string("duplicate task key '") + to_string(task) + "'");
        }
        collection.pools[task] = split.train;
        collection.sizes[task] = split.train.size();
    }
    return collection;
}

/// One line per instance: pool, id, part. Pools are written in sorted name
/// order and instances in part order (train, dev, test), so the manifest is
/// byte-stable for a given split and can be pinned in version control.
inline void write_split_manifest(const std::filesystem::path& path,
                                 const std::map<std::string, const DatasetSplit*>& splits)
{
    io::DelimitedWriter writer(path, '\t', {"pool", "id", "part"});
    for (const auto& [pool, split] : splits) {
        for (const auto& inst : split->train) writer.write_row({pool, inst.id, "train"});
        for (const auto& inst : split->dev) writer.write_row({pool, inst.id, "dev"});
        for (const auto& inst : split->test) writer.write_row({pool, inst.id, "test"});
    }
}

/// Reads a split manifest back into {pool -> {id -> part}}.
inline std::map<std::string, std::unordered_map<std::string, std::string>> read_split_manifest(
    const std::filesystem::path& path)
{
    std::map<std::string, std::unordered_map<std::string, std::string>> parts;
    io::read_delimited(
        path, '\t',
        [&](const std::vector<std::string>& header) {
            if (header != std::vector<std::string>{"pool", "id", "part"}) {
                throw FormatError("not a split manifest: " + path.string());
            }
        },
        [&](const io::DelimitedRow& row) {
            if (row.fields.size() != 3) {
                throw RowError("row " + std::to_string(row.line_number) + " of "
                               + path.string() + ": expected 3 fields");
            }
            parts[row.fields[0]][row.fields[1]] = row.fields[2];
        });
    return parts;
}

/// Rebuilds a DatasetSplit from a cleaned pool and its manifest entries.
inline DatasetSplit apply_split_manifest(
    std::span<const LabeledInstance> pool,
    const std::unordered_map<std::string, std::string>& part_by_id)
{
    DatasetSplit split;
    for (const auto& inst : pool) {
        const auto it = part_by_id.find(inst.id);
        if (it == part_by_id.end()) {
            throw StateError("instance '" + inst.id + "' missing from split manifest");
        }
        if (it->second == "train") {
            split.train.push_back(inst);
        } else if (it->second == "dev") {
            split.dev.push_back(inst);
        } else if (it->second == "test") {
            split.test.push_back(inst);
        } else {
            throw StateError("unknown split part '" + it->second + "'");
        }
    }
    return split;
}

}  // namespace sentmtl

#endif  // SENTMTL_PREPROCESS_HPP
