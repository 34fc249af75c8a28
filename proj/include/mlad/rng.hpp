#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mlad {

// splitmix64; used to derive independent sub-seeds from (seed, tag...) so
// that e.g. prototype draws do not depend on how many speakers are generated.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix_seed(seed ^ mix_seed(tag));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b) {
    return derive_seed(derive_seed(seed, tag_a), tag_b);
}

// mt19937_64 with hand-rolled uniform/normal mappings. The standard engine is
// fully specified; the standard distributions are not, so we avoid them to
// keep streams reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller, one draw per call (the second value is discarded so the
    // stream position is input-independent).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // Unbiased integer in [0, n) via 128-bit multiply-shift with rejection.
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t x = engine_();
            const auto wide = static_cast<unsigned __int128>(x) * n;
            if (static_cast<std::uint64_t>(wide) >= threshold) {
                return static_cast<std::uint64_t>(wide >> 64);
            }
        }
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace mlad
