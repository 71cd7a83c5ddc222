#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentmtl/preprocess.hpp"
#include "sentmtl/synthetic.hpp"

#include "support/temp_dir.hpp"

using namespace sentmtl;

TEST_CASE("generated pools reduce to their prescribed cleaned counts", "[synthetic]")
{
    synthetic::PoolSpec spec;
    spec.language = Language::sl;
    spec.level = Granularity::document;
    spec.raw = {200, 40, 60, 100};
    spec.clean = {180, 36, 55, 89};

    const auto raw = synthetic::generate_pool(spec, 5);
    CHECK(dataset_stats(raw) == spec.raw);
    const auto cleaned = clean_pipeline(raw);
    CHECK(dataset_stats(cleaned) == spec.clean);

    // regeneration with the same seed is identical
    CHECK(synthetic::generate_pool(spec, 5) == raw);
    // and a different seed shuffles differently
    CHECK_FALSE(synthetic::generate_pool(spec, 6) == raw);
}

TEST_CASE("generated duplicates share the label of their source", "[synthetic]")
{
    synthetic::PoolSpec spec;
    spec.language = Language::hr;
    spec.level = Granularity::document;
    spec.raw = {50, 15, 15, 20};
    spec.clean = {41, 12, 13, 16};
    spec.with_mean_score = false;

    const auto raw = synthetic::generate_pool(spec, 9);
    std::unordered_map<std::string, SentimentLabel> first_label;
    for (const auto& inst : raw) {
        const std::string key(text::trim(inst.text));
        if (key.empty()) {
            CHECK(inst.label == SentimentLabel::neutral);  // planted empties are neutral
            continue;
        }
        const auto [it, inserted] = first_label.emplace(key, inst.label);
        if (!inserted) {
            REQUIRE(it->second == inst.label);
        }
    }
}

TEST_CASE("pool files round-trip through their column mappings", "[synthetic]")
{
    testsupport::TempDir dir;
    for (const auto& spec : synthetic::fixture_pool_specs()) {
        const auto pool = synthetic::generate_pool(spec, 77);
        const auto path = dir.path() / (pool_name(spec.language, spec.level) + ".tsv");
        synthetic::write_pool_file(path, pool, spec.with_mean_score);
        const auto reloaded = load_corpus(path, spec.language, spec.level,
                                          synthetic::mapping_for(spec.level, spec.with_mean_score));
        REQUIRE(reloaded.size() == pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) {
            REQUIRE(reloaded[i].id == pool[i].id);
            REQUIRE(reloaded[i].label == pool[i].label);
            REQUIRE(reloaded[i].mean_score == pool[i].mean_score);
            // planted blanks are written as-is; trimmed equality is what the
            // cleaning stage keys on
            REQUIRE(text::trim(reloaded[i].text) == text::trim(pool[i].text));
        }
    }
}

TEST_CASE("the shipped fixture matches its generator", "[synthetic]")
{
    const std::filesystem::path shipped = std::filesystem::path(SENTMTL_SOURCE_DIR)
                                          / "data" / "fixture";
    REQUIRE(std::filesystem::exists(shipped));

    testsupport::TempDir dir;
    synthetic::write_fixture(dir.path());
    for (const auto& spec : synthetic::fixture_pool_specs()) {
        const auto name = pool_name(spec.language, spec.level) + ".tsv";
        INFO("fixture file " << name);
        REQUIRE(std::filesystem::exists(shipped / name));
        CHECK(io::read_file(shipped / name) == io::read_file(dir.path() / name));
    }
}

TEST_CASE("the fixture is class-separable by construction", "[synthetic]")
{
    // every non-blank text contains words from exactly one class bank
    const auto pools = synthetic::generate_fixture();
    std::size_t total = 0;
    for (const auto& [name, pool] : pools) {
        total += pool.size();
        for (const auto& inst : pool) {
            if (text::is_blank(inst.text)) continue;
            for (const SentimentLabel other : kAllLabels) {
                if (other == inst.label) continue;
                for (const auto& word : synthetic::detail::word_bank(other)) {
                    REQUIRE(inst.text.find(word) == std::string::npos);
                }
            }
        }
    }
    CHECK(total == 300);
}
