#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ope {

/// SplitMix64 finalizer; used to spread user seeds and derive stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for an independent named stream of a master seed. Streams with
/// distinct ids are decorrelated, and the mapping is stable across runs.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream));
}

// Stream ids used by the training pipeline. Keeping batch selection on its
// own stream is what makes loss variants comparable under a shared seed:
// negative-phase sampling consumes "negative_phase" draws only, so the
// positive/negative batch schedule is identical across variants.
namespace streams {
constexpr std::uint64_t kInit = 1;           // weight initialization
constexpr std::uint64_t kBatch = 2;          // minibatch index selection
constexpr std::uint64_t kNegativePhase = 3;  // uniform draws / MCMC chains / generator
constexpr std::uint64_t kData = 4;           // dataset generation and subsampling
constexpr std::uint64_t kTrial = 5;          // per-trial seeds in experiments
}  // namespace streams

/// Deterministic random stream. Wraps mt19937_64 but produces doubles with
/// hand-rolled transforms (not std::*_distribution, whose output is
/// implementation-defined), so sequences are reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller. Two engine draws per variate.
    double normal() {
        // u1 in (0, 1] so log is finite.
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Uniform index in [0, n).
    std::size_t uniform_index(std::size_t n) {
        std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    /// True with probability p.
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace ope
