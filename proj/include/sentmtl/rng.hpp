#ifndef SENTMTL_RNG_HPP
#define SENTMTL_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sentmtl {

/// Folds a label into a seed so that independent consumers (per-label
/// shuffles, per-epoch cursors, dropout, ...) get decorrelated streams that
/// are still fully determined by the run seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view label)
{
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (const char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    // splitmix64 finalizer
    h += 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view label, std::uint64_t extra)
{
    return mix_seed(seed ^ (extra * 0x9e3779b97f4a7c15ULL), label);
}

/// Deterministic random source. The engine is std::mt19937_64, whose output
/// sequence is pinned by the standard; all draws on top of it (bounded
/// integers, unit doubles, shuffles) are implemented here because the
/// standard *distributions* are not portable across library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n). n must be nonzero.
    std::uint64_t bounded(std::uint64_t n)
    {
        // rejection sampling over the largest multiple of n
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double unit()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    /// Fisher-Yates; stable across platforms, unlike std::shuffle.
    template <class T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace sentmtl

#endif  // SENTMTL_RNG_HPP
