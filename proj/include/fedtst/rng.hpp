#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace fedtst {

/// Deterministic random source. Wraps std::mt19937_64 (whose output sequence
/// is pinned by the standard) and generates Gaussians with an explicit
/// Box-Muller transform so draws are bit-identical across standard library
/// implementations. Every piece of randomness in the simulator flows through
/// an instance of this class; there is no global generator.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal draw. Box-Muller produces draws in pairs; the spare
    /// is cached, so the cache is part of the generator state.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is finite.
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(engine_() % n);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Mixes a list of words into one seed (splitmix64 finalizer chained over the
/// inputs). Used to derive independent child streams from a master seed, e.g.
/// derive_seed({master, kStreamTrace, client_id}) — so clients, rounds, and
/// purposes never share a stream.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (std::uint64_t w : words) {
        h += w + 0x9e3779b97f4a7c15ULL;
        h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
        h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
        h = h ^ (h >> 31);
    }
    return h;
}

// Stream tags for derive_seed. Keeping them in one place avoids collisions.
inline constexpr std::uint64_t kStreamTrace = 0x01;
inline constexpr std::uint64_t kStreamInit = 0x02;
inline constexpr std::uint64_t kStreamDpNoise = 0x03;
inline constexpr std::uint64_t kStreamDropout = 0x04;

}  // namespace fedtst
