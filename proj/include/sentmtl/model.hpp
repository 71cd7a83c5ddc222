#ifndef SENTMTL_MODEL_HPP
#define SENTMTL_MODEL_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentmtl/corpus.hpp"
#include "sentmtl/encoder.hpp"
#include "sentmtl/errors.hpp"
#include "sentmtl/linalg.hpp"
#include "sentmtl/rng.hpp"
#include "sentmtl/version.hpp"

namespace sentmtl {

inline constexpr std::size_t kNumClasses = 3;

/// The trainable part of the shared encoder: one tanh layer on top of the
/// frozen features. Every task head reads the same physical parameters, so
/// a gradient step from any head moves them for all tasks.
struct SharedLayer {
    Matrix weights;            // hidden_dim x hidden_dim
    std::vector<double> bias;  // hidden_dim
};

/// Per-task affine-plus-softmax classifier over the three classes.
struct ClassificationHead {
    Granularity task = Granularity::document;
    Matrix weights;  // hidden_dim x 3
    std::array<double, 3> bias{};
    double dropout_rate = 0.3;
};

/// One shared encoder plus the task heads the scenario instantiates.
/// Heads never hold encoder parameters; sharing is physical, not copied.
struct ModelBundle {
    EncoderSpec encoder;
    SharedLayer shared;
    std::map<Granularity, ClassificationHead> heads;
    std::uint64_t init_seed = 0;
};

/// Seeded uniform init in [-0.05, 0.05] with zero biases, for both the
/// shared layer and each head.
inline ModelBundle make_bundle(const EncoderSpec& spec, const std::set<Granularity>& tasks,
                               std::uint64_t seed, double dropout_rate = 0.3)
{
    if (tasks.empty()) {
        throw ConfigError("a model bundle needs at least one task head");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ConfigError("dropout_rate must lie in [0,1)");
    }
    ModelBundle bundle;
    bundle.encoder = spec;
    bundle.init_seed = seed;
    const std::size_t h = spec.hidden_dim;

    Rng shared_rng(mix_seed(seed, "init:shared"));
    bundle.shared.weights = Matrix(h, h);
    for (double& v : bundle.shared.weights.data) v = shared_rng.uniform(-0.05, 0.05);
    bundle.shared.bias.assign(h, 0.0);

    for (const Granularity task : tasks) {
        ClassificationHead head;
        head.task = task;
        head.dropout_rate = dropout_rate;
        head.weights = Matrix(h, kNumClasses);
        Rng head_rng(mix_seed(seed, std::string("init:head:") + to_string(task)));
        for (double& v : head.weights.data) v = head_rng.uniform(-0.05, 0.05);
        head.bias = {0.0, 0.0, 0.0};
        bundle.heads.emplace(task, std::move(head));
    }
    return bundle;
}

struct PredictionBatch {
    Matrix probabilities;  // batch x 3, rows sum to 1
    std::vector<SentimentLabel> predicted;
};

/// hidden = tanh(raw * W + b); the trainable encoder stage.
inline Matrix shared_forward(const Matrix& raw_features, const SharedLayer& layer)
{
    require_shape(raw_features.cols == layer.weights.rows,
                  "shared_forward: feature width does not match shared layer");
    Matrix hidden = matmul(raw_features, layer.weights);
    add_row_vector(hidden, layer.bias);
    for (double& v : hidden.data) v = std::tanh(v);
    return hidden;
}

/// Affine map then row-wise softmax. In train mode, inverted dropout is
/// applied to the incoming features using draws from `dropout_rng`; eval
/// mode ignores the generator and is deterministic. When `dropout_scale_out`
/// is given it receives the per-element multipliers (1/keep or 0; all ones
/// in eval mode) so the backward pass can reuse the exact mask.
inline PredictionBatch head_forward(const Matrix& features, const ClassificationHead& head,
                                    Mode mode, Rng* dropout_rng = nullptr,
                                    Matrix* dropout_scale_out = nullptr)
{
    require_shape(features.cols == head.weights.rows,
                  "head_forward: feature width does not match head weights");
    const Matrix* input = &features;
    Matrix dropped;
    Matrix scale;
    if (mode == Mode::train && head.dropout_rate > 0.0) {
        if (dropout_rng == nullptr) {
            throw StateError("train-mode head_forward needs the run's dropout generator");
        }
        const double keep = 1.0 - head.dropout_rate;
        scale = Matrix(features.rows, features.cols);
        dropped = features;
        for (std::size_t i = 0; i < scale.data.size(); ++i) {
            scale.data[i] = (dropout_rng->unit() < keep) ? 1.0 / keep : 0.0;
            dropped.data[i] *= scale.data[i];
        }
        input = &dropped;
    }
    PredictionBatch batch;
    batch.probabilities = matmul(*input, head.weights);
    add_row_vector(batch.probabilities, head.bias);
    softmax_rows(batch.probabilities);
    batch.predicted.reserve(batch.probabilities.rows);
    for (std::size_t i = 0; i < batch.probabilities.rows; ++i) {
        const auto row = batch.probabilities.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < kNumClasses; ++j) {
            if (row[j] > row[best]) best = j;
        }
        // probability columns follow the label order negative/neutral/positive
        batch.predicted.push_back(static_cast<SentimentLabel>(best));
    }
    if (dropout_scale_out != nullptr) {
        if (scale.data.empty()) {
            scale = Matrix(features.rows, features.cols);
            for (double& v : scale.data) v = 1.0;
        }
        *dropout_scale_out = std::move(scale);
    }
    return batch;
}

/// Mean categorical cross-entropy: -ln(probability of the gold class),
/// averaged over the batch.
inline double compute_loss(const PredictionBatch& batch, std::span<const SentimentLabel> gold)
{
    if (batch.probabilities.rows != gold.size()) {
        throw ShapeError("compute_loss: batch and gold lengths differ");
    }
    if (gold.empty()) {
        throw ShapeError("compute_loss: empty batch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const double p = batch.probabilities.at(i, static_cast<std::size_t>(gold[i]));
        total += -std::log(p);
    }
    return total / static_cast<double>(gold.size());
}

/// Intermediate activations of one forward pass, kept for the backward pass.
struct ForwardCache {
    Matrix raw;           // frozen encoder output
    Matrix hidden;        // tanh shared-layer output
    Matrix dropout_scale; // per-element multipliers applied before the head
    PredictionBatch batch;
};

inline ForwardCache forward_cached(const Matrix& raw_features, const ModelBundle& bundle,
                                   Granularity task, Mode mode, Rng* dropout_rng = nullptr)
{
    const auto head_it = bundle.heads.find(task);
    if (head_it == bundle.heads.end()) {
        throw ConfigError(std::string("bundle has no head for task '") + to_string(task) + "'");
    }
    ForwardCache cache;
    cache.raw = raw_features;
    cache.hidden = shared_forward(cache.raw, bundle.shared);
    cache.batch = head_forward(cache.hidden, head_it->second, mode, dropout_rng,
                               &cache.dropout_scale);
    return cache;
}

/// Full eval-mode forward pass from texts: a pure function of
/// (bundle parameters, texts).
inline PredictionBatch predict(std::span<const std::string> texts, const ModelBundle& bundle,
                               Granularity task)
{
    const Matrix raw = encode(texts, bundle.encoder, Mode::eval);
    return forward_cached(raw, bundle, task, Mode::eval).batch;
}

/// Gradients of the mean cross-entropy loss for one (shared layer, head)
/// pair. Heads not involved in the step have no gradient by construction.
struct Gradients {
    Matrix shared_weights;
    std::vector<double> shared_bias;
    Matrix head_weights;
    std::array<double, 3> head_bias{};
};

/// Analytic backward pass matching forward_cached. Dropout zeros feed
/// through the cached `dropped` activations: a dropped unit contributes no
/// gradient to the head weights and none through to the shared layer.
inline Gradients backward(const ForwardCache& cache, std::span<const SentimentLabel> gold,
                          const ModelBundle& bundle, Granularity task)
{
    const auto head_it = bundle.heads.find(task);
    if (head_it == bundle.heads.end()) {
        throw ConfigError(std::string("bundle has no head for task '") + to_string(task) + "'");
    }
    const ClassificationHead& head = head_it->second;
    const std::size_t batch_size = gold.size();
    if (cache.batch.probabilities.rows != batch_size || batch_size == 0) {
        throw ShapeError("backward: batch and gold lengths differ");
    }
    const double inv_batch = 1.0 / static_cast<double>(batch_size);

    // d(loss)/d(logits) = (softmax - onehot) / batch
    Matrix dlogits = cache.batch.probabilities;
    for (std::size_t i = 0; i < batch_size; ++i) {
        dlogits.at(i, static_cast<std::size_t>(gold[i])) -= 1.0;
        for (std::size_t j = 0; j < kNumClasses; ++j) {
            dlogits.at(i, j) *= inv_batch;
        }
    }

    // the head saw hidden .* dropout_scale
    Matrix head_input = cache.hidden;
    for (std::size_t i = 0; i < head_input.data.size(); ++i) {
        head_input.data[i] *= cache.dropout_scale.data[i];
    }

    Gradients grads;
    grads.head_weights = matmul_at_b(head_input, dlogits);
    const auto bias_sums = column_sums(dlogits);
    for (std::size_t j = 0; j < kNumClasses; ++j) grads.head_bias[j] = bias_sums[j];

    // back through the head, the dropout mask, and tanh into the shared layer
    Matrix dhidden = matmul_a_bt(dlogits, head.weights);
    for (std::size_t i = 0; i < dhidden.data.size(); ++i) {
        const double h = cache.hidden.data[i];
        dhidden.data[i] *= cache.dropout_scale.data[i] * (1.0 - h * h);
    }
    grads.shared_weights = matmul_at_b(cache.raw, dhidden);
    grads.shared_bias = column_sums(dhidden);
    return grads;
}

// --- checkpoint serialization ------------------------------------------------

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m)
{
    return nlohmann::json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

inline Matrix matrix_from_json(const nlohmann::json& j)
{
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) {
        throw StateError("checkpoint matrix payload does not match its declared shape");
    }
    return m;
}

}  // namespace detail

/// Self-describing checkpoint: encoder config, every parameter, the init
/// seed, and a format version. Serialization is byte-stable for a fixed
/// parameter set (shortest-round-trip number formatting, sorted keys).
inline nlohmann::json checkpoint_to_json(const ModelBundle& bundle)
{
    nlohmann::json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["encoder"] = {
        {"kind", to_string(bundle.encoder.kind)},
        {"hidden_dim", bundle.encoder.hidden_dim},
        {"max_tokens", bundle.encoder.max_tokens},
        {"pooling", to_string(bundle.encoder.pooling)},
        {"asset_ref", bundle.encoder.asset_ref},
    };
    j["init_seed"] = bundle.init_seed;
    j["shared"] = {
        {"weights", detail::matrix_to_json(bundle.shared.weights)},
        {"bias", bundle.shared.bias},
    };
    nlohmann::json heads = nlohmann::json::object();
    for (const auto& [task, head] : bundle.heads) {
        heads[to_string(task)] = {
            {"weights", detail::matrix_to_json(head.weights)},
            {"bias", head.bias},
            {"dropout_rate", head.dropout_rate},
        };
    }
    j["heads"] = heads;
    return j;
}

inline void save_checkpoint(const std::filesystem::path& path, const ModelBundle& bundle)
{
    io::write_file(path, checkpoint_to_json(bundle).dump(2) + "\n");
}

inline ModelBundle checkpoint_from_json(const nlohmann::json& j)
{
    if (j.at("format_version").get<int>() != kCheckpointFormatVersion) {
        throw StateError("unsupported checkpoint format version");
    }
    ModelBundle bundle;
    const auto& enc = j.at("encoder");
    const auto kind = parse_encoder_kind(enc.at("kind").get<std::string>());
    if (!kind) throw StateError("checkpoint names an unknown encoder kind");
    bundle.encoder.kind = *kind;
    bundle.encoder.hidden_dim = enc.at("hidden_dim").get<std::size_t>();
    bundle.encoder.max_tokens = enc.at("max_tokens").get<std::size_t>();
    const auto pooling = parse_pooling(enc.at("pooling").get<std::string>());
    if (!pooling) throw StateError("checkpoint names an unknown pooling mode");
    bundle.encoder.pooling = *pooling;
    bundle.encoder.asset_ref = enc.at("asset_ref").get<std::string>();
    bundle.init_seed = j.at("init_seed").get<std::uint64_t>();
    bundle.shared.weights = detail::matrix_from_json(j.at("shared").at("weights"));
    bundle.shared.bias = j.at("shared").at("bias").get<std::vector<double>>();
    for (const auto& [name, head_json] : j.at("heads").items()) {
        const auto task = parse_granularity(name);
        if (!task) throw StateError("checkpoint names an unknown task '" + name + "'");
        ClassificationHead head;
        head.task = *task;
        head.weights = detail::matrix_from_json(head_json.at("weights"));
        const auto bias = head_json.at("bias").get<std::vector<double>>();
        if (bias.size() != kNumClasses) {
            throw StateError("checkpoint head bias must have 3 entries");
        }
        std::copy(bias.begin(), bias.end(), head.bias.begin());
        head.dropout_rate = head_json.at("dropout_rate").get<double>();
        bundle.heads.emplace(*task, std::move(head));
    }
    if (bundle.heads.empty()) {
        throw StateError("checkpoint contains no task heads");
    }
    return bundle;
}

inline ModelBundle load_checkpoint(const std::filesystem::path& path)
{
    return checkpoint_from_json(nlohmann::json::parse(io::read_file(path)));
}

}  // namespace sentmtl

#endif  // SENTMTL_MODEL_HPP
