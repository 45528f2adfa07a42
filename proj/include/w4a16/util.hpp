#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace w4a16 {

inline constexpr uint32_t ceil_div(uint32_t a, uint32_t b) { return (a + b - 1) / b; }
inline constexpr uint64_t ceil_div64(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

// splitmix64: tiny deterministic PRNG. Used for all seeded data generation so
// outputs are identical across platforms and standard-library versions
// (std::uniform_*_distribution is implementation-defined and unsuitable here).
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound) by rejection-free modulo; bias is irrelevant for
    // test-data generation and the result is platform-stable.
    uint64_t next_below(uint64_t bound) { return next() % bound; }

    int64_t next_in(int64_t lo, int64_t hi) {  // inclusive range
        return lo + static_cast<int64_t>(next_below(static_cast<uint64_t>(hi - lo + 1)));
    }
};

// Mix values into a derived seed (order-sensitive).
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    SplitMix64 g(a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2)));
    return g.next();
}

// FNV-1a 64-bit over a byte range; used for functional checksums in reports.
inline uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xCBF29CE484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

// Run fn(i) for i in [0, count) on `workers` threads, worker w taking indices
// w, w+W, 2W+w, ... Work items must write to disjoint state; the static
// striding means results never depend on scheduling. workers == 0 picks the
// hardware thread count.
template <typename Fn>
void parallel_for(uint64_t count, unsigned workers, Fn&& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    if (workers == 1 || count <= 1) {
        for (uint64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const unsigned nthreads = static_cast<unsigned>(std::min<uint64_t>(workers, count));
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (unsigned w = 0; w < nthreads; ++w) {
        pool.emplace_back([&fn, w, nthreads, count] {
            for (uint64_t i = w; i < count; i += nthreads) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace w4a16
