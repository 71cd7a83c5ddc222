#ifndef SENTMTL_ENCODER_HPP
#define SENTMTL_ENCODER_HPP

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sentmtl/errors.hpp"
#include "sentmtl/hash.hpp"
#include "sentmtl/io.hpp"
#include "sentmtl/linalg.hpp"
#include "sentmtl/rng.hpp"
#include "sentmtl/text.hpp"

namespace sentmtl {

enum class EncoderKind { toy_deterministic, pretrained_adapter };

inline const char* to_string(EncoderKind kind)
{
    return kind == EncoderKind::toy_deterministic ? "toy_deterministic" : "pretrained_adapter";
}

inline std::optional<EncoderKind> parse_encoder_kind(std::string_view token)
{
    const std::string t = text::lower_ascii(text::trim(token));
    if (t == "toy_deterministic" || t == "toy") return EncoderKind::toy_deterministic;
    if (t == "pretrained_adapter" || t == "pretrained") return EncoderKind::pretrained_adapter;
    return std::nullopt;
}

/// Pooling of per-token vectors into one text vector (adapter only; the toy
/// encoder pools implicitly by summing n-gram projections).
enum class Pooling { first_token, mean };

inline const char* to_string(Pooling p)
{
    return p == Pooling::first_token ? "first_token" : "mean";
}

inline std::optional<Pooling> parse_pooling(std::string_view token)
{
    const std::string t = text::lower_ascii(text::trim(token));
    if (t == "first_token" || t == "first") return Pooling::first_token;
    if (t == "mean" || t == "mean_pool") return Pooling::mean;
    return std::nullopt;
}

inline constexpr const char* kAssetDirEnvVar = "SENTMTL_ASSET_DIR";

struct EncoderSpec {
    EncoderKind kind = EncoderKind::toy_deterministic;
    std::size_t hidden_dim = 64;
    std::size_t max_tokens = 512;
    Pooling pooling = Pooling::first_token;
    std::string asset_ref;                // pretrained_adapter only
    std::filesystem::path asset_dir;      // overridden by SENTMTL_ASSET_DIR
};

enum class Mode { train, eval };

namespace toy {

// Feature extraction is frozen: the projection is derived from this fixed
// seed, never from the run seed, so a text's raw features are an intrinsic
// function of the text.
inline constexpr std::uint64_t kProjectionSeed = 0x73656e746d746cULL;
inline constexpr std::size_t kHashBuckets = 4096;

/// Fixed random projection from hash buckets to hidden_dim, cached per
/// hidden_dim. Read-mostly; the lock only guards first construction.
inline const Matrix& projection(std::size_t hidden_dim)
{
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<Matrix>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[hidden_dim];
    if (!slot) {
        auto m = std::make_unique<Matrix>(kHashBuckets, hidden_dim);
        Rng rng(mix_seed(kProjectionSeed, "projection", hidden_dim));
        for (double& v : m->data) {
            v = rng.uniform(-1.0, 1.0);
        }
        slot = std::move(m);
    }
    return *slot;
}

/// Hashed character-3-gram counts of the first max_tokens codepoints,
/// projected to hidden_dim and L2-normalized. Deterministic; texts shorter
/// than three codepoints hash their full codepoint sequence instead.
inline void encode_into(std::string_view full_text, std::size_t hidden_dim,
                        std::size_t max_tokens, std::span<double> out)
{
    const std::string_view text_view = text::truncate_codepoints(full_text, max_tokens);
    const Matrix& proj = projection(hidden_dim);

    std::unordered_map<std::size_t, double> counts;
    std::size_t pos = 0;
    std::array<char32_t, 3> window{};
    std::size_t seen = 0;
    while (pos < text_view.size()) {
        window[0] = window[1];
        window[1] = window[2];
        window[2] = text::next_codepoint(text_view, pos);
        ++seen;
        if (seen >= 3) {
            std::uint64_t h = 0xcbf29ce484222325ULL;
            for (const char32_t cp : window) {
                for (int shift = 0; shift < 32; shift += 8) {
                    h ^= (cp >> shift) & 0xFF;
                    h *= 0x100000001b3ULL;
                }
            }
            counts[static_cast<std::size_t>(h % kHashBuckets)] += 1.0;
        }
    }
    if (seen > 0 && seen < 3) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (std::size_t i = 3 - seen; i < 3; ++i) {
            for (int shift = 0; shift < 32; shift += 8) {
                h ^= (window[i] >> shift) & 0xFF;
                h *= 0x100000001b3ULL;
            }
        }
        counts[static_cast<std::size_t>(h % kHashBuckets)] += 1.0;
    }

    for (double& v : out) v = 0.0;
    for (const auto& [bucket, count] : counts) {
        const auto row = proj.row(bucket);
        for (std::size_t j = 0; j < hidden_dim; ++j) {
            out[j] += count * row[j];
        }
    }
    double norm = 0.0;
    for (const double v : out) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (double& v : out) v /= norm;
    }
}

}  // namespace toy

/// A frozen token-embedding table exported from the external pretrained
/// model. The export itself is outside this toolkit; the adapter consumes
/// the table, tokenizes, truncates, and pools.
///
/// File layout (tab-separated, header "token<TAB>v0..v{d-1}" implied by the
/// first line "#sentmtl-encoder-asset v1 dim=<d>"): one token per line,
/// lowercase, followed by d decimal vector components.
class PretrainedAsset {
public:
    static std::shared_ptr<const PretrainedAsset> load(const std::filesystem::path& path)
    {
        auto asset = std::make_shared<PretrainedAsset>();
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw AssetError("cannot open encoder asset: " + path.string());
        }
        std::string line;
        if (!std::getline(in, line)) {
            throw AssetError("empty encoder asset: " + path.string());
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string_view magic = "#sentmtl-encoder-asset v1 dim=";
        if (line.rfind(magic, 0) != 0) {
            throw AssetError("unrecognized encoder asset header: " + path.string());
        }
        asset->dim_ = static_cast<std::size_t>(std::strtoul(line.data() + magic.size(), nullptr, 10));
        if (asset->dim_ == 0) {
            throw AssetError("encoder asset declares dimension 0: " + path.string());
        }
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto fields = io::split_line(line, '\t');
            if (fields.size() != asset->dim_ + 1) {
                throw AssetError("asset line " + std::to_string(line_no) + " has "
                                 + std::to_string(fields.size() - 1) + " components, expected "
                                 + std::to_string(asset->dim_));
            }
            std::vector<double> vec(asset->dim_);
            for (std::size_t i = 0; i < asset->dim_; ++i) {
                vec[i] = std::strtod(fields[i + 1].c_str(), nullptr);
            }
            asset->vectors_.emplace(text::lower_ascii(fields[0]), std::move(vec));
        }
        if (asset->vectors_.empty()) {
            throw AssetError("encoder asset has no token vectors: " + path.string());
        }
        return asset;
    }

    std::size_t dim() const { return dim_; }

    const std::vector<double>* lookup(const std::string& token) const
    {
        const auto it = vectors_.find(token);
        return it == vectors_.end() ? nullptr : &it->second;
    }

private:
    std::size_t dim_ = 0;
    std::unordered_map<std::string, std::vector<double>> vectors_;
};

namespace detail {

/// Lowercased word tokens: maximal runs of non-space, non-punctuation
/// codepoints. Keeps letters/digits of any script byte-for-byte.
inline std::vector<std::string> word_tokens(std::string_view s)
{
    std::vector<std::string> tokens;
    std::string cur;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const std::size_t start = pos;
        const char32_t cp = text::next_codepoint(s, pos);
        const bool boundary = text::is_space(cp)
            || (cp < 128 && std::ispunct(static_cast<int>(cp)));
        if (boundary) {
            if (!cur.empty()) {
                tokens.push_back(text::lower_ascii(cur));
                cur.clear();
            }
        } else {
            cur.append(s.substr(start, pos - start));
        }
    }
    if (!cur.empty()) tokens.push_back(text::lower_ascii(cur));
    return tokens;
}

inline std::filesystem::path resolve_asset_path(const EncoderSpec& spec)
{
    if (spec.asset_ref.empty()) {
        throw AssetError("pretrained_adapter requires an asset_ref");
    }
    std::vector<std::filesystem::path> candidates;
    if (const char* env = std::getenv(kAssetDirEnvVar); env != nullptr && *env != '\0') {
        candidates.emplace_back(std::filesystem::path(env) / spec.asset_ref);
    }
    if (!spec.asset_dir.empty()) {
        candidates.emplace_back(spec.asset_dir / spec.asset_ref);
    }
    candidates.emplace_back(spec.asset_ref);
    for (const auto& candidate : candidates) {
        if (std::filesystem::exists(candidate)) {
            return candidate;
        }
    }
    std::string tried;
    for (const auto& candidate : candidates) {
        if (!tried.empty()) tried += ", ";
        tried += candidate.string();
    }
    throw AssetError("cannot resolve encoder asset '" + spec.asset_ref + "' (tried: " + tried + ")");
}

inline std::shared_ptr<const PretrainedAsset> cached_asset(const std::filesystem::path& path)
{
    static std::mutex mutex;
    static std::map<std::string, std::shared_ptr<const PretrainedAsset>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[path.string()];
    if (!slot) {
        slot = PretrainedAsset::load(path);
    }
    return slot;
}

}  // namespace detail

/// Encodes a batch of texts into raw (frozen) feature rows. Both encoder
/// kinds are deterministic functions of (spec, text); `mode` is accepted for
/// interface symmetry with the trainable stages, which do distinguish it.
inline Matrix encode(std::span<const std::string> texts, const EncoderSpec& spec,
                     Mode mode = Mode::eval)
{
    (void)mode;
    if (spec.hidden_dim == 0 || spec.max_tokens == 0) {
        throw ConfigError("encoder hidden_dim and max_tokens must be positive");
    }
    Matrix features(texts.size(), spec.hidden_dim);
    if (spec.kind == EncoderKind::toy_deterministic) {
        for (std::size_t i = 0; i < texts.size(); ++i) {
            toy::encode_into(texts[i], spec.hidden_dim, spec.max_tokens, features.row(i));
        }
        return features;
    }

    const auto asset = detail::cached_asset(detail::resolve_asset_path(spec));
    if (asset->dim() != spec.hidden_dim) {
        throw AssetError("asset dimension " + std::to_string(asset->dim())
                         + " does not match configured hidden_dim "
                         + std::to_string(spec.hidden_dim));
    }
    for (std::size_t i = 0; i < texts.size(); ++i) {
        auto tokens = detail::word_tokens(texts[i]);
        if (tokens.size() > spec.max_tokens) {
            tokens.resize(spec.max_tokens);
        }
        auto out = features.row(i);
        std::size_t pooled = 0;
        for (const auto& token : tokens) {
            const auto* vec = asset->lookup(token);
            if (vec == nullptr) continue;
            ++pooled;
            for (std::size_t j = 0; j < spec.hidden_dim; ++j) {
                out[j] += (*vec)[j];
            }
            if (spec.pooling == Pooling::first_token) break;
        }
        if (spec.pooling == Pooling::mean && pooled > 1) {
            for (double& v : out) v /= static_cast<double>(pooled);
        }
    }
    return features;
}

}  // namespace sentmtl

#endif  // SENTMTL_ENCODER_HPP
