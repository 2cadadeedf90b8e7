#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "jema/error.hpp"

namespace jema {

// Deterministic 64-bit splitmix generator. The engine is owned by the caller
// and threaded explicitly through every randomized routine; nothing in the
// library touches global RNG state, so a (seed, config, corpus) triple always
// replays bit-identically.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Derive an independent stream without disturbing this one. Used for
    // per-epoch shuffles and per-subset sampling so that consumers stay
    // reproducible regardless of call order elsewhere.
    SplitMix64 fork(std::uint64_t tag) const {
        SplitMix64 child(state_ ^ (0xD1B54A32D192ED03ull * (tag + 1)));
        child.next();
        return child;
    }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; two fresh draws per call, no cached spare.
    double gaussian() {
        double u1 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Uniform integer in [0, n). Lemire multiply-shift; bias is < 2^-64.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) fail("SplitMix64::below: n must be positive");
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices drawn from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        if (k > n) fail("sample_without_replacement: k=", k, " exceeds n=", n);
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

private:
    std::uint64_t state_;
};

} // namespace jema
