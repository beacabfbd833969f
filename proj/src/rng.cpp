#include "tatum/rng.hpp"

#include <algorithm>
#include <limits>

#include "tatum/errors.hpp"

namespace tatum {

int Rng::pick_log_weighted(const std::vector<double>& log_weights) {
    if (log_weights.empty())
        throw DimensionError("pick_log_weighted: no weights");
    double best = -std::numeric_limits<double>::infinity();
    for (double lw : log_weights) best = std::max(best, lw);
    if (!std::isfinite(best))
        throw InfeasibleError("pick_log_weighted: all weights are zero");
    double total = 0.0;
    for (double lw : log_weights) total += std::exp(lw - best);
    const double u = uniform() * total;
    double acc = 0.0;
    int last_positive = -1;
    for (size_t i = 0; i < log_weights.size(); ++i) {
        const double w = std::exp(log_weights[i] - best);
        if (w > 0) last_positive = static_cast<int>(i);
        acc += w;
        if (u < acc) return static_cast<int>(i);
    }
    return last_positive; // u == total from rounding
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    // splitmix64 round over seed xor tag
    std::uint64_t z = seed ^ (tag + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, const char* tag) {
    std::uint64_t h = 1469598103934665603ULL; // FNV-1a
    for (const char* p = tag; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 1099511628211ULL;
    }
    return mix_seed(seed, h);
}

} // namespace tatum
