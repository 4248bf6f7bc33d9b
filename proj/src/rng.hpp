#pragma once

#include <cstdint>
#include <cmath>

namespace rlmesh {

/// Counter-based random streams. A stream is (key, counter); every draw is a
/// pure function of both, so state serializes as two integers and replays
/// identically across platforms (no libstdc++ distribution internals).
namespace rng {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a + 0x9E3779B97F4A7C15ull * (b + 1));
}

class Stream {
public:
    Stream() = default;
    explicit Stream(std::uint64_t key) : key_(key) {}
    Stream(std::uint64_t seed, std::uint64_t stream_id)
        : key_(hash_combine(seed, stream_id)) {}
    Stream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t sub)
        : key_(hash_combine(hash_combine(seed, stream_id), sub)) {}

    std::uint64_t next_u64() {
        ++counter_;
        return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ull);
    }

    /// Uniform in [0, 1).
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Standard normal via Box-Muller (two fresh uniforms per draw; no cache
    /// so the state stays (key, counter) only).
    double next_normal() {
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }
    void set_counter(std::uint64_t c) { counter_ = c; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

/// Fisher-Yates shuffle driven by a stream.
template <typename Vec>
void shuffle(Vec& v, Stream& s) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(s.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace rng
}  // namespace rlmesh
