#pragma once

#include "semigroup/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace semigroup {

/// Independent random streams for one path. The same (seed, path, stream)
/// triple always yields the same draws, whatever thread simulates the path.
enum class StreamTag : std::uint32_t {
    Brownian = 0,
    Auxiliary = 1,
};

class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path, StreamTag tag = StreamTag::Brownian) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32),
                          static_cast<std::uint32_t>(tag)};
        engine_.seed(seq);
    }

    double normal() { return normal_(engine_); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    /// Speed-2 Brownian increment over dt: each component N(0, 2 dt).
    void increment(Vec& out, int m, double dt) {
        out.resize(m);
        const double s = std::sqrt(2.0 * dt);
        for (int i = 0; i < m; ++i) out(i) = s * normal();
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

}  // namespace semigroup
