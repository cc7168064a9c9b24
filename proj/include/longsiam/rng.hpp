#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace longsiam {

/// Mixes a master seed with a stream id so per-subject / per-run / per-worker
/// generators are decorrelated (splitmix64 finalizer).
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
    uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic generator. The engine is std::mt19937_64 (bit-exact per the
/// standard); the variate transforms are hand-rolled so draw sequences do not
/// depend on the standard library implementation.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Uniform integer in [0, n); rejection-sampled, n >= 1.
    int64_t uniform_int(int64_t n) {
        const uint64_t un = static_cast<uint64_t>(n);
        const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        uint64_t x;
        do { x = eng_(); } while (x >= limit);
        return static_cast<int64_t>(x % un);
    }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(uniform_int(i + 1))]);
        }
    }

    /// k distinct indices drawn from [0, n), in draw order.
    std::vector<int64_t> sample_without_replacement(int64_t n, int64_t k) {
        std::vector<int64_t> pool(static_cast<size_t>(n));
        for (int64_t i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
        std::vector<int64_t> picked;
        picked.reserve(static_cast<size_t>(k));
        for (int64_t i = 0; i < k; ++i) {
            int64_t j = uniform_int(n - i);
            picked.push_back(pool[static_cast<size_t>(j)]);
            pool[static_cast<size_t>(j)] = pool[static_cast<size_t>(n - 1 - i)];
        }
        return picked;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace longsiam
