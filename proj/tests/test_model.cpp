#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "sentmtl/model.hpp"
#include "sentmtl/optimizer.hpp"
#include "sentmtl/rng.hpp"

#include "support/gradcheck.hpp"
#include "support/temp_dir.hpp"

using namespace sentmtl;

namespace {

EncoderSpec toy_spec(std::size_t hidden = 64, std::size_t max_tokens = 512)
{
    EncoderSpec spec;
    spec.kind = EncoderKind::toy_deterministic;
    spec.hidden_dim = hidden;
    spec.max_tokens = max_tokens;
    return spec;
}

ClassificationHead zero_head(std::size_t hidden)
{
    ClassificationHead head;
    head.weights = Matrix(hidden, 3);
    head.bias = {0.0, 0.0, 0.0};
    head.dropout_rate = 0.0;
    return head;
}

}  // namespace

TEST_CASE("toy encoding is deterministic per text", "[model]")
{
    const std::vector<std::string> texts = {"enako besedilo", "enako besedilo"};
    const Matrix features = encode(texts, toy_spec());
    for (std::size_t j = 0; j < features.cols; ++j) {
        REQUIRE(features.at(0, j) == features.at(1, j));
    }
    const Matrix again = encode(texts, toy_spec());
    CHECK(features == again);
}

TEST_CASE("toy encoding separates distinct texts", "[model]")
{
    std::vector<std::string> texts;
    for (int i = 0; i < 1000; ++i) {
        texts.push_back("vzorec št " + std::to_string(i * 37) + " beseda" + std::to_string(i));
    }
    const Matrix features = encode(texts, toy_spec(64));
    std::set<std::vector<double>> rows;
    for (std::size_t i = 0; i < features.rows; ++i) {
        const auto row = features.row(i);
        rows.emplace(row.begin(), row.end());
    }
    CHECK(rows.size() == texts.size());
}

TEST_CASE("toy encoding truncates to the leading codepoints", "[model]")
{
    const std::string prefix = "začetek besedila";  // 16 codepoints
    const std::string longer = prefix + " in še veliko nadaljevanja, ki ne sme vplivati";
    auto spec = toy_spec(32, 16);
    const Matrix a = encode(std::vector<std::string>{longer}, spec);
    const Matrix b = encode(std::vector<std::string>{prefix}, spec);
    CHECK(a == b);

    // short texts (fewer codepoints than an n-gram window) still encode
    const Matrix tiny = encode(std::vector<std::string>{"ab"}, spec);
    double norm = 0.0;
    for (const double v : tiny.row(0)) norm += v * v;
    CHECK(norm == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("head_forward produces calibrated softmax rows", "[model]")
{
    const std::size_t hidden = 4;
    Matrix features(2, hidden);
    features.at(0, 0) = 0.3;
    features.at(1, 2) = -0.7;

    SECTION("zero parameters give the uniform distribution")
    {
        const auto batch = head_forward(features, zero_head(hidden), Mode::eval);
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                REQUIRE(batch.probabilities.at(i, j) == Catch::Approx(1.0 / 3).margin(1e-12));
            }
        }
    }
    SECTION("a ln2 bias on the first class halves the mass")
    {
        auto head = zero_head(hidden);
        head.bias = {std::log(2.0), 0.0, 0.0};
        const auto batch = head_forward(features, head, Mode::eval);
        CHECK(batch.probabilities.at(0, 0) == Catch::Approx(0.5).margin(1e-12));
        CHECK(batch.probabilities.at(0, 1) == Catch::Approx(0.25).margin(1e-12));
        CHECK(batch.probabilities.at(0, 2) == Catch::Approx(0.25).margin(1e-12));
        CHECK(batch.predicted[0] == SentimentLabel::negative);
    }
    SECTION("softmax is invariant to a constant logit shift")
    {
        Rng rng(3);
        auto head = zero_head(hidden);
        for (double& v : head.weights.data) v = rng.uniform(-2.0, 2.0);
        head.bias = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const auto base = head_forward(features, head, Mode::eval);
        auto shifted = head;
        for (double& b : shifted.bias) b += 17.5;
        const auto moved = head_forward(features, shifted, Mode::eval);
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                REQUIRE(moved.probabilities.at(i, j)
                        == Catch::Approx(base.probabilities.at(i, j)).margin(1e-12));
            }
        }
    }
    SECTION("rows are probability vectors for arbitrary finite logits")
    {
        Rng rng(9);
        for (int round = 0; round < 50; ++round) {
            auto head = zero_head(hidden);
            for (double& v : head.weights.data) v = rng.uniform(-300.0, 300.0);
            Matrix wild(3, hidden);
            for (double& v : wild.data) v = rng.uniform(-5.0, 5.0);
            const auto batch = head_forward(wild, head, Mode::eval);
            for (std::size_t i = 0; i < batch.probabilities.rows; ++i) {
                double sum = 0.0;
                for (const double p : batch.probabilities.row(i)) {
                    REQUIRE(p >= 0.0);
                    sum += p;
                }
                REQUIRE(sum == Catch::Approx(1.0).margin(1e-6));
            }
        }
    }
    SECTION("dimension mismatch is a shape error")
    {
        CHECK_THROWS_AS(head_forward(features, zero_head(hidden + 1), Mode::eval), ShapeError);
    }
}

TEST_CASE("compute_loss matches hand-computed cross-entropy", "[model]")
{
    PredictionBatch batch;
    batch.probabilities = Matrix(2, 3);

    SECTION("perfect one-hot predictions cost nothing")
    {
        batch.probabilities.at(0, 0) = 1.0;
        batch.probabilities.at(1, 2) = 1.0;
        const std::vector<SentimentLabel> gold = {SentimentLabel::negative,
                                                  SentimentLabel::positive};
        CHECK(compute_loss(batch, gold) == 0.0);
    }
    SECTION("uniform predictions cost ln 3")
    {
        for (double& v : batch.probabilities.data) v = 1.0 / 3;
        const std::vector<SentimentLabel> gold = {SentimentLabel::neutral,
                                                  SentimentLabel::negative};
        CHECK(compute_loss(batch, gold) == Catch::Approx(std::log(3.0)).margin(1e-12));
    }
    SECTION("mixed rows average the per-instance losses")
    {
        // rows (0.5, 0.25, 0.25); gold classes 0 and 1
        for (std::size_t i = 0; i < 2; ++i) {
            batch.probabilities.at(i, 0) = 0.5;
            batch.probabilities.at(i, 1) = 0.25;
            batch.probabilities.at(i, 2) = 0.25;
        }
        const std::vector<SentimentLabel> gold = {SentimentLabel::negative,
                                                  SentimentLabel::neutral};
        const double expected = (-std::log(0.5) - std::log(0.25)) / 2.0;
        CHECK(compute_loss(batch, gold) == Catch::Approx(expected).margin(1e-12));
        CHECK(expected == Catch::Approx(1.0397).margin(5e-5));
    }
    SECTION("length mismatch is a shape error")
    {
        const std::vector<SentimentLabel> gold = {SentimentLabel::neutral};
        CHECK_THROWS_AS(compute_loss(batch, gold), ShapeError);
    }
}

TEST_CASE("analytic gradients match central differences", "[model]")
{
    auto spec = toy_spec(12);
    auto bundle = make_bundle(spec, {Granularity::document, Granularity::paragraph,
                                     Granularity::sentence},
                              17, 0.3);
    std::vector<std::string> texts = {
        "zelo dobra novica o uspehu", "slaba novica o izgubi",
        "nevtralno porocilo o seji",  "odlicen rezultat sezone",
        "katastrofa na trgu",         "obicajen pregled dneva",
    };
    std::vector<SentimentLabel> gold = {
        SentimentLabel::positive, SentimentLabel::negative, SentimentLabel::neutral,
        SentimentLabel::positive, SentimentLabel::negative, SentimentLabel::neutral,
    };
    const Matrix raw = encode(texts, spec);
    for (const Granularity task : kAllGranularities) {
        const auto result = testsupport::gradient_check(bundle, task, raw, gold, 1e-4);
        INFO("task " << to_string(task) << ", " << result.params_checked << " parameters");
        CHECK(result.params_checked > 0);
        CHECK(result.max_rel_err < 1e-4);
    }
}

TEST_CASE("dropout masks features only in train mode", "[model]")
{
    const std::size_t hidden = 32;
    Matrix features(4, hidden);
    Rng init(5);
    for (double& v : features.data) v = init.uniform(-1.0, 1.0);
    ClassificationHead head = zero_head(hidden);
    head.dropout_rate = 0.3;

    Matrix scale;
    Rng dropout_rng(77);
    head_forward(features, head, Mode::train, &dropout_rng, &scale);
    std::size_t dropped = 0;
    for (const double s : scale.data) {
        const bool kept = std::abs(s - 1.0 / 0.7) < 1e-12;
        const bool zeroed = s == 0.0;
        REQUIRE((kept || zeroed));
        dropped += zeroed;
    }
    // 128 draws at rate 0.3: all-kept or all-dropped would be deeply wrong
    CHECK(dropped > 10);
    CHECK(dropped < 80);

    Matrix eval_scale;
    const auto eval_a = head_forward(features, head, Mode::eval, nullptr, &eval_scale);
    const auto eval_b = head_forward(features, head, Mode::eval);
    CHECK(eval_a.probabilities == eval_b.probabilities);
    for (const double s : eval_scale.data) REQUIRE(s == 1.0);

    CHECK_THROWS_AS(head_forward(features, head, Mode::train, nullptr), StateError);
}

TEST_CASE("one optimizer step touches only the sampled head", "[model]")
{
    auto spec = toy_spec(16);
    auto bundle = make_bundle(spec, {Granularity::document, Granularity::paragraph,
                                     Granularity::sentence},
                              23, 0.3);
    const ModelBundle before = bundle;

    std::vector<std::string> texts = {"prva novica", "druga zgodba", "tretji odstavek"};
    std::vector<SentimentLabel> gold = {SentimentLabel::positive, SentimentLabel::negative,
                                        SentimentLabel::neutral};
    const Matrix raw = encode(texts, spec);
    Rng dropout_rng(mix_seed(23, "dropout"));
    const auto cache = forward_cached(raw, bundle, Granularity::paragraph, Mode::train,
                                      &dropout_rng);
    const auto grads = backward(cache, gold, bundle, Granularity::paragraph);
    BundleOptimizer optimizer(AdamConfig{1e-3, 0.9, 0.999, 1e-8});
    optimizer.apply(bundle, Granularity::paragraph, grads);

    CHECK(bundle.heads.at(Granularity::document).weights
          == before.heads.at(Granularity::document).weights);
    CHECK(bundle.heads.at(Granularity::document).bias
          == before.heads.at(Granularity::document).bias);
    CHECK(bundle.heads.at(Granularity::sentence).weights
          == before.heads.at(Granularity::sentence).weights);
    CHECK(bundle.heads.at(Granularity::sentence).bias
          == before.heads.at(Granularity::sentence).bias);
    CHECK_FALSE(bundle.shared.weights == before.shared.weights);
    CHECK_FALSE(bundle.heads.at(Granularity::paragraph).weights
                == before.heads.at(Granularity::paragraph).weights);
}

TEST_CASE("checkpoints round-trip bit-exactly and serialize stably", "[model]")
{
    testsupport::TempDir dir;
    auto bundle = make_bundle(toy_spec(24), {Granularity::document, Granularity::sentence}, 31);
    bundle.encoder.asset_ref = "";

    const auto path = dir.path() / "ckpt.json";
    save_checkpoint(path, bundle);
    const auto reloaded = load_checkpoint(path);

    CHECK(reloaded.encoder.kind == bundle.encoder.kind);
    CHECK(reloaded.encoder.hidden_dim == bundle.encoder.hidden_dim);
    CHECK(reloaded.encoder.max_tokens == bundle.encoder.max_tokens);
    CHECK(reloaded.init_seed == bundle.init_seed);
    CHECK(reloaded.shared.weights == bundle.shared.weights);
    CHECK(reloaded.shared.bias == bundle.shared.bias);
    REQUIRE(reloaded.heads.size() == 2);
    for (const auto& [task, head] : bundle.heads) {
        CHECK(reloaded.heads.at(task).weights == head.weights);
        CHECK(reloaded.heads.at(task).bias == head.bias);
        CHECK(reloaded.heads.at(task).dropout_rate == head.dropout_rate);
    }

    // byte-stable: serializing the same parameters twice is identical
    CHECK(checkpoint_to_json(bundle).dump(2) == checkpoint_to_json(reloaded).dump(2));

    // reloaded parameters predict identically
    const std::vector<std::string> texts = {"preizkusno besedilo", "drugo besedilo"};
    const auto a = predict(texts, bundle, Granularity::document);
    const auto b = predict(texts, reloaded, Granularity::document);
    CHECK(a.probabilities == b.probabilities);
}

TEST_CASE("pretrained adapter resolves and pools token vectors", "[model]")
{
    testsupport::TempDir dir;

    EncoderSpec spec;
    spec.kind = EncoderKind::pretrained_adapter;
    spec.hidden_dim = 2;
    spec.asset_ref = "mini.vectors";
    spec.asset_dir = dir.path();

    SECTION("unresolvable asset reference")
    {
        CHECK_THROWS_AS(encode(std::vector<std::string>{"x"}, spec), AssetError);
    }

    std::ofstream asset(dir.path() / "mini.vectors");
    asset << "#sentmtl-encoder-asset v1 dim=2\n"
          << "dobro\t1\t0\n"
          << "slabo\t0\t1\n";
    asset.close();

    SECTION("first-token pooling uses the first known token")
    {
        spec.pooling = Pooling::first_token;
        const Matrix f = encode(std::vector<std::string>{"res dobro slabo"}, spec);
        CHECK(f.at(0, 0) == 1.0);
        CHECK(f.at(0, 1) == 0.0);
    }
    SECTION("mean pooling averages the known tokens")
    {
        spec.pooling = Pooling::mean;
        const Matrix f = encode(std::vector<std::string>{"Dobro, slabo."}, spec);
        CHECK(f.at(0, 0) == Catch::Approx(0.5));
        CHECK(f.at(0, 1) == Catch::Approx(0.5));
    }
    SECTION("dimension mismatch against the configuration")
    {
        spec.hidden_dim = 3;
        CHECK_THROWS_AS(encode(std::vector<std::string>{"dobro"}, spec), AssetError);
    }
}
