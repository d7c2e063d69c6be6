#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace uniest {

using Rng = std::mt19937_64;

/// Independent stream for run `index` under `master`; the same pair always
/// yields the same engine state.
inline Rng make_stream(std::uint64_t master, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n), n > 0.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    // Lemire's multiply-shift with rejection; unbiased and library-independent.
    using u128 = unsigned __int128;
    std::uint64_t x = rng();
    u128 m = static_cast<u128>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - static_cast<std::uint64_t>(n)) % n;
        while (low < threshold) {
            x = rng();
            m = static_cast<u128>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::size_t>(m >> 64);
}

/// Fisher-Yates permutation of 0..n-1.
inline std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
    return order;
}

} // namespace uniest
