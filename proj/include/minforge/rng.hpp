#pragma once
#include <cmath>
#include <cstdint>
#include <random>

namespace minforge {

// Deterministic random source. mt19937_64 has a standard-pinned output
// sequence; the double mappings below are hand-rolled so results are
// bit-identical across platforms and standard libraries (the std::*_distribution
// adapters are implementation-defined and would break byte-identical replays).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // uniform in [0, 1) with 53 random mantissa bits
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // standard normal, Box-Muller; the cached second value keeps call counts even
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is finite
        double u1 = 1.0 - uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Derive an independent stream for a named stage, so e.g. data generation
    // and certification sampling never share state no matter the call order.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        // splitmix64 over seed ^ golden-ratio-scrambled stream index
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static Rng for_stage(std::uint64_t seed, std::uint64_t stream) {
        return Rng(derive(seed, stream));
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Stage indices used when deriving per-stage streams from one user seed.
namespace stream {
constexpr std::uint64_t data = 1;
constexpr std::uint64_t forge = 2;
constexpr std::uint64_t certify = 3;
constexpr std::uint64_t baseline = 4;
constexpr std::uint64_t trial = 5;
} // namespace stream

} // namespace minforge
