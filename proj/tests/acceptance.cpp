// Acceptance suite: one criterion per function, one pass/fail line each.
// Run with no arguments for the full suite or with criterion names to run a
// subset. Exits nonzero if any selected criterion fails.
//
// The corpus-statistics criteria run against a deterministic synthetic
// replica generated from the published reference statistics of the two
// public corpora; the sandbox build never downloads the originals. One
// cell of the published post-cleaning table is internally inconsistent
// (the Slovene document row sums its labels to 10,420 but prints 10,417
// examples, and the published baseline metrics derive from the 10,417 /
// 5,415-neutral variant). The replica follows the arithmetic; the check
// still asserts the cell exactly as published and reports the conflict.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sentmtl/commands.hpp"
#include "sentmtl/evaluator.hpp"
#include "sentmtl/model.hpp"
#include "sentmtl/optimizer.hpp"
#include "sentmtl/preprocess.hpp"
#include "sentmtl/synthetic.hpp"
#include "sentmtl/trainer.hpp"

#include "support/fixture_config.hpp"
#include "support/gradcheck.hpp"
#include "support/temp_dir.hpp"

using namespace sentmtl;

namespace {

// ---- published reference statistics of the two corpora ---------------------

struct ReferencePool {
    const char* name;
    Language language;
    Granularity level;
    LevelStats raw;            // before cleaning
    LevelStats clean_printed;  // post-cleaning, exactly as published
    LevelStats clean_target;   // arithmetically consistent generation target
    bool with_mean;
};

const std::vector<ReferencePool>& reference_pools()
{
    // The sl_doc cleaned row as published does not sum: 1,665+3,337+5,418 =
    // 10,420 != 10,417. The neutral count consistent with the published
    // examples column and with the published majority-baseline metrics is
    // 5,415, so the replica is generated with that value.
    static const std::vector<ReferencePool> pools = {
        {"sl_doc", Language::sl, Granularity::document,
         {10427, 1665, 3337, 5425}, {10417, 1665, 3337, 5418}, {10417, 1665, 3337, 5415}, true},
        {"sl_para", Language::sl, Granularity::paragraph,
         {89999, 14636, 23721, 51642}, {86803, 14270, 23265, 49268}, {86803, 14270, 23265, 49268},
         true},
        {"sl_sent", Language::sl, Granularity::sentence,
         {165071, 27091, 44629, 93351}, {161291, 26679, 44014, 90598},
         {161291, 26679, 44014, 90598}, true},
        {"hr_doc", Language::hr, Granularity::document,
         {2025, 325, 456, 1244}, {1988, 321, 450, 1217}, {1988, 321, 450, 1217}, false},
    };
    return pools;
}

struct BaselineTriple {
    const char* name;
    double precision;
    double recall;
    double f1;
};

constexpr BaselineTriple kPublishedBaselines[] = {
    {"sl_doc", 17.33, 33.33, 22.80},
    {"sl_para", 18.91, 33.33, 24.13},
    {"sl_sent", 18.72, 33.33, 23.97},
    {"hr_doc", 20.43, 33.33, 25.33},
};

constexpr std::uint64_t kReplicaSeed = 20210901;

synthetic::PoolSpec replica_spec(const ReferencePool& ref)
{
    synthetic::PoolSpec spec;
    spec.language = ref.language;
    spec.level = ref.level;
    spec.raw = ref.raw;
    spec.clean = ref.clean_target;
    spec.with_mean_score = ref.with_mean;
    return spec;
}

// ---- tiny reporting framework ----------------------------------------------

class Check {
public:
    explicit Check(std::string name) : name_(std::move(name)) {}

    void expect(bool ok, const std::string& detail)
    {
        if (!ok) {
            failures_.push_back(detail);
        }
        ++checks_;
    }

    template <class T>
    void expect_eq(const T& got, const T& want, const std::string& what)
    {
        std::ostringstream os;
        os << what << ": got " << got << ", expected " << want;
        expect(got == want, os.str());
    }

    void note(const std::string& line) { notes_.push_back(line); }

    bool finish(std::chrono::milliseconds elapsed, std::chrono::milliseconds limit) const
    {
        bool ok = failures_.empty();
        std::vector<std::string> failures = failures_;
        if (limit.count() > 0 && elapsed > limit) {
            failures.push_back("runtime " + std::to_string(elapsed.count())
                               + " ms exceeds the " + std::to_string(limit.count())
                               + " ms budget");
            ok = false;
        }
        std::printf("[%s] %s (%lld ms, %zu checks)\n", ok ? "PASS" : "FAIL", name_.c_str(),
                    static_cast<long long>(elapsed.count()), checks_);
        for (const auto& note : notes_) {
            std::printf("        note: %s\n", note.c_str());
        }
        for (const auto& failure : failures) {
            std::printf("        mismatch: %s\n", failure.c_str());
        }
        return ok;
    }

private:
    std::string name_;
    std::size_t checks_ = 0;
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

std::filesystem::path fixture_dir()
{
    return std::filesystem::path(SENTMTL_SOURCE_DIR) / "data" / "fixture";
}

ScenarioData load_fixture_data(std::uint64_t seed)
{
    ScenarioData data;
    SplitSpec split_spec;
    split_spec.seed = seed;
    for (const auto& spec : synthetic::fixture_pool_specs()) {
        const auto name = pool_name(spec.language, spec.level);
        const auto raw = load_corpus(fixture_dir() / (name + ".tsv"), spec.language, spec.level,
                                     synthetic::mapping_for(spec.level, spec.with_mean_score));
        data.splits[name] = stratified_split(clean_pipeline(raw), split_spec);
    }
    return data;
}

std::string stats_str(const LevelStats& s)
{
    std::ostringstream os;
    os << s.examples << " (" << s.positive << "/" << s.negative << "/" << s.neutral << ")";
    return os.str();
}

// ---- criteria ---------------------------------------------------------------

/// Raw ingestion at corpus scale: replica files on disk, loaded through the
/// real parser, must reproduce every published pre-cleaning count exactly.
bool criterion_ingest_counts(Check& check)
{
    testsupport::TempDir dir;
    for (const auto& ref : reference_pools()) {
        const auto pool = synthetic::generate_pool(replica_spec(ref), kReplicaSeed);
        const auto path = dir.path() / (std::string(ref.name) + ".tsv");
        synthetic::write_pool_file(path, pool, ref.with_mean);
        const auto loaded =
            load_corpus(path, ref.language, ref.level,
                        synthetic::mapping_for(ref.level, ref.with_mean));
        const LevelStats stats = dataset_stats(loaded);
        check.expect_eq(stats.examples, ref.raw.examples, std::string(ref.name) + " examples");
        check.expect_eq(stats.positive, ref.raw.positive, std::string(ref.name) + " positive");
        check.expect_eq(stats.negative, ref.raw.negative, std::string(ref.name) + " negative");
        check.expect_eq(stats.neutral, ref.raw.neutral, std::string(ref.name) + " neutral");
    }
    return true;
}

/// Cleaning (empty-drop then dedup) must reproduce the published
/// post-cleaning counts with zero tolerance, asserted cell by cell exactly
/// as published.
bool criterion_preprocess_counts(Check& check)
{
    for (const auto& ref : reference_pools()) {
        const auto raw = synthetic::generate_pool(replica_spec(ref), kReplicaSeed);
        const LevelStats stats = dataset_stats(clean_pipeline(raw));
        check.expect_eq(stats.examples, ref.clean_printed.examples,
                        std::string(ref.name) + " examples");
        check.expect_eq(stats.positive, ref.clean_printed.positive,
                        std::string(ref.name) + " positive");
        check.expect_eq(stats.negative, ref.clean_printed.negative,
                        std::string(ref.name) + " negative");
        check.expect_eq(stats.neutral, ref.clean_printed.neutral,
                        std::string(ref.name) + " neutral");
        if (!(ref.clean_printed == ref.clean_target)) {
            check.note(std::string(ref.name) + ": published row is internally inconsistent ("
                       + stats_str(ref.clean_printed)
                       + " does not sum); replica follows the examples column: "
                       + stats_str(ref.clean_target));
        }
    }
    return true;
}

/// The majority baseline on stratified test splits must land within 0.15
/// absolute percent of every published triple, and the counting
/// implementation must agree with the closed form in the neutral fraction
/// to 1e-9 on the full cleaned sets.
bool criterion_baseline_metrics(Check& check)
{
    std::map<std::string, MetricsReport> measured;
    for (const auto& ref : reference_pools()) {
        const auto cleaned =
            clean_pipeline(synthetic::generate_pool(replica_spec(ref), kReplicaSeed));
        SplitSpec split_spec;
        split_spec.seed = 7;
        const auto split = stratified_split(cleaned, split_spec);

        std::vector<SentimentLabel> train_labels;
        std::vector<SentimentLabel> test_gold;
        for (const auto& inst : split.train) train_labels.push_back(inst.label);
        for (const auto& inst : split.dev) train_labels.push_back(inst.label);
        for (const auto& inst : split.test) test_gold.push_back(inst.label);
        measured[ref.name] = majority_baseline(train_labels, test_gold);

        // closed form on the full set: all-neutral predictor scores
        // P=q/3, R=1/3, F1=2q/(3(1+q)) where q is the neutral fraction
        std::vector<SentimentLabel> full_gold;
        for (const auto& inst : cleaned) full_gold.push_back(inst.label);
        const std::vector<SentimentLabel> all_neutral(full_gold.size(), SentimentLabel::neutral);
        const MetricsReport counted = macro_prf(full_gold, all_neutral);
        const double q = static_cast<double>(dataset_stats(cleaned).neutral)
                         / static_cast<double>(cleaned.size());
        check.expect(std::abs(counted.macro_precision - q / 3.0) < 1e-9,
                     std::string(ref.name) + " closed-form precision differs from counting");
        check.expect(std::abs(counted.macro_recall - 1.0 / 3.0) < 1e-9,
                     std::string(ref.name) + " closed-form recall differs from counting");
        check.expect(std::abs(counted.macro_f1 - 2.0 * q / (3.0 * (1.0 + q))) < 1e-9,
                     std::string(ref.name) + " closed-form F1 differs from counting");
    }

    for (const auto& expected : kPublishedBaselines) {
        const MetricsReport& report = measured.at(expected.name);
        const double p = report.macro_precision * 100.0;
        const double r = report.macro_recall * 100.0;
        const double f1 = report.macro_f1 * 100.0;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s baseline P/R/F1 %.4f/%.4f/%.4f vs %.2f/%.2f/%.2f",
                      expected.name, p, r, f1, expected.precision, expected.recall, expected.f1);
        check.expect(std::abs(p - expected.precision) <= 0.15
                         && std::abs(r - expected.recall) <= 0.15
                         && std::abs(f1 - expected.f1) <= 0.15,
                     buf);
    }
    return true;
}

/// Analytic gradients against central finite differences (step 1e-4) for
/// every parameter group of every head and the shared trainable layer.
bool criterion_gradient_check(Check& check)
{
    EncoderSpec spec;
    spec.hidden_dim = 16;
    auto bundle = make_bundle(
        spec, {Granularity::document, Granularity::paragraph, Granularity::sentence}, 97, 0.3);

    std::vector<std::string> texts;
    std::vector<SentimentLabel> gold;
    Rng rng(12);
    for (int i = 0; i < 8; ++i) {
        const SentimentLabel label = kAllLabels[i % 3];
        texts.push_back(synthetic::detail::class_flavored_text(label, 400 + i, rng, 5));
        gold.push_back(label);
    }
    const Matrix raw = encode(texts, spec);

    for (const Granularity task : kAllGranularities) {
        const auto result = testsupport::gradient_check(bundle, task, raw, gold, 1e-4);
        char buf[120];
        std::snprintf(buf, sizeof(buf), "%s head: max relative error %.3g over %zu parameters",
                      to_string(task), result.max_rel_err, result.params_checked);
        check.expect(result.max_rel_err < 1e-4, buf);
        check.expect(result.params_checked
                         == spec.hidden_dim * spec.hidden_dim + spec.hidden_dim
                                + spec.hidden_dim * 3 + 3,
                     std::string(to_string(task)) + " head: unexpected parameter count");
    }
    return true;
}

/// One paragraph-task step must leave the document and sentence heads
/// bitwise untouched while moving the shared parameters; 20 seeds.
bool criterion_head_isolation(Check& check)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EncoderSpec spec;
        spec.hidden_dim = 24;
        auto bundle = make_bundle(
            spec, {Granularity::document, Granularity::paragraph, Granularity::sentence}, seed,
            0.3);
        const ModelBundle before = bundle;

        Rng rng(mix_seed(seed, "isolation_batch"));
        std::vector<std::string> texts;
        std::vector<SentimentLabel> gold;
        for (int i = 0; i < 12; ++i) {
            const SentimentLabel label = kAllLabels[rng.bounded(3)];
            texts.push_back(synthetic::detail::class_flavored_text(label, 700 + i, rng, 4));
            gold.push_back(label);
        }
        const Matrix raw = encode(texts, spec);
        Rng dropout_rng(mix_seed(seed, "dropout"));
        const auto cache =
            forward_cached(raw, bundle, Granularity::paragraph, Mode::train, &dropout_rng);
        const auto grads = backward(cache, gold, bundle, Granularity::paragraph);
        BundleOptimizer optimizer(AdamConfig{1e-3, 0.9, 0.999, 1e-8});
        optimizer.apply(bundle, Granularity::paragraph, grads);

        const auto seed_tag = "seed " + std::to_string(seed);
        check.expect(bundle.heads.at(Granularity::document).weights
                             == before.heads.at(Granularity::document).weights
                         && bundle.heads.at(Granularity::document).bias
                                == before.heads.at(Granularity::document).bias,
                     seed_tag + ": document head changed");
        check.expect(bundle.heads.at(Granularity::sentence).weights
                             == before.heads.at(Granularity::sentence).weights
                         && bundle.heads.at(Granularity::sentence).bias
                                == before.heads.at(Granularity::sentence).bias,
                     seed_tag + ": sentence head changed");
        check.expect(!(bundle.shared.weights == before.shared.weights),
                     seed_tag + ": shared parameters did not change");
        check.expect(!(bundle.heads.at(Granularity::paragraph).weights
                       == before.heads.at(Granularity::paragraph).weights),
                     seed_tag + ": paragraph head did not change");
    }
    return true;
}

/// 100,000 task draws over pools sized like the cleaned corpora's training
/// sides must pass a chi-square goodness-of-fit test at alpha = 0.01.
bool criterion_sampling_distribution(Check& check)
{
    std::map<Granularity, std::size_t> sizes;
    for (const auto& ref : reference_pools()) {
        if (ref.language == Language::hr) continue;  // one pool per task key
        const auto cleaned =
            clean_pipeline(synthetic::generate_pool(replica_spec(ref), kReplicaSeed));
        SplitSpec split_spec;
        split_spec.seed = 7;
        const auto split = stratified_split(cleaned, split_spec);
        sizes[ref.level] = split.train.size() + split.dev.size();
    }
    check.note("pool sizes: document " + std::to_string(sizes[Granularity::document])
               + ", paragraph " + std::to_string(sizes[Granularity::paragraph]) + ", sentence "
               + std::to_string(sizes[Granularity::sentence]));

    TaskCollection collection;
    collection.sizes = sizes;
    Rng rng(314159);
    const std::uint64_t draws = 100000;
    std::map<Granularity, std::uint64_t> observed;
    for (std::uint64_t i = 0; i < draws; ++i) {
        ++observed[sample_task(collection, rng)];
    }
    double total = 0.0;
    for (const auto& [task, size] : sizes) total += static_cast<double>(size);
    double stat = 0.0;
    for (const auto& [task, size] : sizes) {
        const double expected = draws * (static_cast<double>(size) / total);
        const double got = static_cast<double>(observed[task]);
        stat += (got - expected) * (got - expected) / expected;
    }
    // chi-square critical value, 2 degrees of freedom, alpha = 0.01
    char buf[100];
    std::snprintf(buf, sizeof(buf), "chi-square statistic %.4f exceeds 9.21034", stat);
    check.expect(stat < 9.21034, buf);
    return true;
}

/// The zero-shot scenarios must never feed a Croatian instance to a
/// gradient step, asserted from the persisted RunHistory on the fixture.
bool criterion_zero_shot_purity(Check& check)
{
    const auto data = load_fixture_data(7);
    for (const Scenario scenario : {Scenario::sl_stl_zero_hr, Scenario::sl_mtl_zero_hr}) {
        TrainConfig config;
        config.learning_rate = 0.05;
        config.batch_size = 16;
        config.epochs = 2;
        config.seed = 7;
        EncoderSpec spec;
        spec.hidden_dim = 32;
        auto bundle = make_scenario_bundle(scenario, spec, config);
        const auto result = train_scenario(scenario, data, std::move(bundle), config);
        std::uint64_t hr = 0;
        std::uint64_t steps = 0;
        for (const auto& step : result.history.steps) {
            hr += step.hr_instances;
            ++steps;
        }
        check.expect(steps > 0, std::string(to_string(scenario)) + ": no steps recorded");
        check.expect(hr == 0, std::string(to_string(scenario)) + ": consumed "
                                  + std::to_string(hr) + " Croatian instances");
    }
    return true;
}

/// Two full pipeline runs (preprocess, train, evaluate) with the same seed
/// must produce byte-identical split manifests and reports.
bool criterion_determinism(Check& check)
{
    testsupport::TempDir dir;
    const auto run_once = [&](const std::string& tag) {
        std::filesystem::create_directories(dir.path() / tag);
        const auto out_dir = dir.path() / tag / "out";
        const auto config_path =
            testsupport::write_fixture_config(dir.path() / tag, fixture_dir(), out_dir, 7);
        auto config = load_config(config_path);
        config.train.epochs = 2;
        std::ostringstream sink;
        if (cmd_preprocess(config, true, sink) != kExitOk) {
            throw StateError("fixture preprocess failed during the determinism run");
        }
        const auto outcome = cmd_train(config, "SLHR_MTL", dir.path() / tag / "run", sink);
        cmd_evaluate(config, outcome.run_dir, {}, sink);
    };
    run_once("a");
    run_once("b");

    const auto compare = [&](const std::filesystem::path& rel) {
        const auto in_a = dir.path() / "a" / rel;
        const auto in_b = dir.path() / "b" / rel;
        if (!std::filesystem::exists(in_a) || !std::filesystem::exists(in_b)) {
            check.expect(false, rel.string() + " was not produced by both runs");
            return;
        }
        check.expect(io::read_file(in_a) == io::read_file(in_b),
                     rel.string() + " differs between identical runs");
    };
    compare(std::filesystem::path("out") / "split_manifest.tsv");
    compare(std::filesystem::path("run") / "history.jsonl");
    compare(std::filesystem::path("run") / "checkpoint_best.json");
    compare(std::filesystem::path("run") / "evaluation" / "report.txt");
    for (const auto& name : {"sl_doc", "sl_para", "sl_sent", "hr_doc"}) {
        compare(std::filesystem::path("run") / "evaluation"
                / ("metrics_" + std::string(name) + ".json"));
        compare(std::filesystem::path("run") / "evaluation"
                / ("predictions_" + std::string(name) + ".tsv"));
    }
    return true;
}

/// Single-task training on the fixture's Croatian documents must reach dev
/// macro-F1 of at least 90 within the default five epochs.
bool criterion_toy_learnability(Check& check)
{
    const auto data = load_fixture_data(7);
    TrainConfig config;
    config.learning_rate = 0.05;
    config.batch_size = 16;
    config.seed = 7;
    EncoderSpec spec;
    spec.hidden_dim = 64;
    auto bundle = make_scenario_bundle(Scenario::hr_stl, spec, config);
    const auto result = train_scenario(Scenario::hr_stl, data, std::move(bundle), config);

    check.expect(result.history.epochs.size() == 5, "expected the default five epochs");
    double best = 0.0;
    std::string trace;
    for (const auto& epoch : result.history.epochs) {
        const double f1 =
            epoch.dev_metrics.at(Granularity::document).macro_f1 * 100.0;
        best = std::max(best, f1);
        if (!trace.empty()) trace += ", ";
        trace += format_percent(f1 / 100.0);
    }
    check.note("dev macro-F1 by epoch: " + trace);
    check.expect(best >= 90.0, "best dev macro-F1 " + format_percent(best / 100.0)
                                   + " is below 90");
    return true;
}

}  // namespace

int main(int argc, char** argv)
{
    struct Entry {
        const char* name;
        bool (*run)(Check&);
        std::chrono::milliseconds limit;
    };
    const std::vector<Entry> entries = {
        {"ingest_counts", criterion_ingest_counts, std::chrono::milliseconds(120000)},
        {"preprocess_counts", criterion_preprocess_counts, std::chrono::milliseconds(300000)},
        {"baseline_metrics", criterion_baseline_metrics, std::chrono::milliseconds(60000)},
        {"gradient_check", criterion_gradient_check, std::chrono::milliseconds(60000)},
        {"head_isolation", criterion_head_isolation, std::chrono::milliseconds(0)},
        {"sampling_distribution", criterion_sampling_distribution, std::chrono::milliseconds(0)},
        {"zero_shot_purity", criterion_zero_shot_purity, std::chrono::milliseconds(0)},
        {"determinism", criterion_determinism, std::chrono::milliseconds(0)},
        {"toy_learnability", criterion_toy_learnability, std::chrono::milliseconds(0)},
    };

    std::set<std::string> selected;
    for (int i = 1; i < argc; ++i) selected.insert(argv[i]);
    for (const auto& name : selected) {
        const bool known = std::any_of(entries.begin(), entries.end(),
                                       [&](const Entry& e) { return name == e.name; });
        if (!known) {
            std::fprintf(stderr, "unknown criterion '%s'\n", name.c_str());
            return 2;
        }
    }

    bool all_ok = true;
    for (const auto& entry : entries) {
        if (!selected.empty() && selected.count(entry.name) == 0) continue;
        Check check(entry.name);
        const auto start = std::chrono::steady_clock::now();
        bool ok = true;
        try {
            entry.run(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        ok = check.finish(elapsed, entry.limit);
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}
