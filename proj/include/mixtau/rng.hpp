#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "mixtau/dist.hpp"

namespace mixtau {

namespace detail {

// Philox4x32-10 block cipher (Salmon et al., SC 2011).
struct Philox4x32 {
    static constexpr std::uint32_t kW32A = 0x9E3779B9u;
    static constexpr std::uint32_t kW32B = 0xBB67AE85u;
    static constexpr std::uint32_t kM4x32A = 0xD2511F53u;
    static constexpr std::uint32_t kM4x32B = 0xCD9E8D57u;

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM4x32A) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM4x32B) * ctr[2];
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kW32A;
            key[1] += kW32B;
        }
        return ctr;
    }
};

// splitmix64 finalizer, used to hash hierarchical stream paths into Philox keys
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based random stream. A stream is identified by (seed, path); identical
/// identifiers reproduce identical draws regardless of thread schedule or platform.
/// Subdivide with child(i) before drawing; draws advance only the local counter.
class RngStream {
public:
    static constexpr int kMaxDepth = 6;

    static RngStream root(std::uint64_t seed) {
        RngStream s;
        s.seed_ = seed;
        s.key_ = detail::mix64(seed ^ 0x243F6A8885A308D3ull);
        return s;
    }

    RngStream child(std::uint64_t index) const {
        RngStream s(*this);
        s.key_ = detail::mix64(s.key_ ^ detail::mix64(index + 0x9E3779B97F4A7C15ull));
        if (s.depth_ < kMaxDepth) s.path_[s.depth_] = index;
        ++s.depth_;
        s.counter_ = 0;
        return s;
    }

    std::uint64_t next_u64() {
        const std::array<std::uint32_t, 4> out = detail::Philox4x32::block(
            {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
             0x2545F491u, 0x4F6CDD1Du},
            {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)});
        ++counter_;
        return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    }

    /// Uniform draw strictly inside (0, 1): (k + 1/2) * 2^-53 over 53-bit k.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform index in {0, ..., n-1}.
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
    }

    /// Standard normal via the inverse CDF (one uniform per draw).
    double normal() { return dist::norm_quantile(uniform01()); }

    std::uint64_t seed() const { return seed_; }

    std::string lineage() const {
        std::string s = std::to_string(seed_);
        for (int i = 0; i < depth_ && i < kMaxDepth; ++i) s += "/" + std::to_string(path_[i]);
        if (depth_ > kMaxDepth) s += "/...";
        return s;
    }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t key_ = 0;
    std::array<std::uint64_t, kMaxDepth> path_{};
    int depth_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace mixtau
