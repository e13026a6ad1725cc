#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace storyaug {

// Distribution helpers are written out by hand: the standard distributions are
// not required to produce the same stream on every standard library, and every
// seeded result in this toolkit has to be byte-stable across platforms.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    return splitmix64(seed ^ splitmix64(salt + 0x632BE59BD9B4E019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
    return derive_seed(seed, fnv1a64(key));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view key, std::uint64_t index) {
    return derive_seed(derive_seed(seed, key), index);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), rejection-sampled so there is no modulo bias.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
        for (;;) {
            const std::uint64_t x = engine_();
            if (x < limit) return x % n;
        }
    }

    bool coin() { return (engine_() >> 63) != 0; }

    template <class T> void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace storyaug
