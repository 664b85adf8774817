#pragma once

#include <cstdint>
#include <random>

// Per-trajectory random streams.  Each trajectory owns an engine seeded
// deterministically from (base_seed, trajectory_index), so results do not
// depend on execution order or thread count.

namespace strobe::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t index) {
    return splitmix64(splitmix64(base_seed) ^ splitmix64(index + 0x51ed270b0a1ull));
}

struct TrajectoryRng {
    std::mt19937_64 engine;
    std::normal_distribution<double> normal{0.0, 1.0};

    TrajectoryRng(std::uint64_t base_seed, std::uint64_t index)
        : engine(stream_seed(base_seed, index)) {}

    explicit TrajectoryRng(std::uint64_t raw_seed) : engine(raw_seed) {}

    double gaussian() { return normal(engine); }
    double gaussian(double sigma) { return sigma * normal(engine); }
    std::uint64_t uniform_index(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine);
    }
};

} // namespace strobe::rng
