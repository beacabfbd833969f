#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace tatum {

/// Deterministic random source.  mt19937_64 output is fully specified by
/// the standard, and the transforms below avoid the library distribution
/// objects (whose algorithms are implementation-defined), so a seed pins
/// the exact stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (one value per pair of uniforms;
    /// the spare is discarded to keep the stream position predictable).
    double normal() {
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    double normal(double mean, double var) {
        return mean + std::sqrt(var) * normal();
    }

    /// Index draw proportional to exp(log_weights), by inverse CDF.
    /// All -inf entries must not exhaust the vector.
    int pick_log_weighted(const std::vector<double>& log_weights);

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Stable 64-bit mix for deriving stream seeds from (seed, tags...).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);
std::uint64_t mix_seed(std::uint64_t seed, const char* tag);

} // namespace tatum
