#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tatum/mcmc.hpp"
#include "tatum/score.hpp"
#include "tatum/smc.hpp"
#include "tatum/tempo_model.hpp"

namespace tatum {

/// Levenshtein distance between the interval sequences of two scores,
/// with exact-rational token comparison.  With exclude_zero, positions
/// whose reference interval is zero are removed from the reference and,
/// where the candidate aligns by onset index, from the candidate too.
int edit_distance(const Score& reference, const Score& candidate,
                  bool exclude_zero = false);

/// Deterministic tempo curve for generated problems.
struct Modulation {
    enum class Kind { none, sinusoidal } kind = Kind::sinusoidal;
    double amplitude = 0.3;  // in octaves of the period
    double period_beats = 32.0;
};

struct ClaveProblem {
    Score truth;
    OnsetSequence onsets;
    std::vector<double> omega; // log2 period modulation at each onset
    std::vector<double> tau;   // noiseless intended times
};

/// Son-clave rhythm (intervals 3/4, 3/4, 1, 1/2, 1 per four-beat cycle)
/// with a smoothly modulated period: period(c) = base_tempo *
/// 2^(amplitude*sin(2*pi*c/period_beats)), observation noise variance R.
ClaveProblem gen_clave(int n_onsets, double base_tempo, const Modulation& modulation,
                       double obs_var, std::uint64_t seed);

/// One inference configuration for benchmarking and the transcribe command.
struct MethodSpec {
    enum class Kind { pf, gf, hybrid, gibbs, sa, ii, exact } kind = Kind::pf;
    std::string name;     // report label; defaults from the parameters
    int particles = 100;  // pf/gf/hybrid
    int sweeps = 50;      // gibbs/sa
    int restarts = 1;     // ii
    int block = 1;        // gibbs/sa/ii proposal width
    bool refine = true;   // pf/gf/hybrid: reduced-space polish of the MAP
};

std::string method_label(const MethodSpec& spec);

/// Runs one method on one problem; returns its score estimate (first
/// onset pinned at location c0).
Score run_method(const MethodSpec& spec, const OnsetSequence& onsets,
                 const TempoParams& params, const ScorePrior& prior,
                 const std::vector<Rational>& grid, std::uint64_t seed,
                 const Rational& c0 = Rational(0));

struct BenchmarkConfig {
    std::vector<MethodSpec> methods;
    int trials = 20;
    int n_onsets = 11;
    double base_tempo = 0.5;
    Modulation modulation;
    double obs_var = 0.025 * 0.025;
    TempoParams params;          // model the methods infer with
    ScorePrior prior;
    std::vector<Rational> grid;
    std::uint64_t seed = 0;
    bool exclude_zero = false;   // edit-distance variant
};

struct MethodReport {
    std::string name;
    int trials = 0;
    int errors = 0;               // trials that threw; excluded from stats
    double edit_median = 0.0, edit_q25 = 0.0, edit_q75 = 0.0;
    double lld_median = 0.0, lld_q25 = 0.0, lld_q75 = 0.0; // log p(est,y)-log p(truth,y)
    std::uint64_t potential_ops = 0;
    double wall_ms = 0.0;
    std::vector<int> edits;       // per-trial values, trial order
    std::vector<double> llds;
};

struct BenchmarkReport {
    std::vector<MethodReport> methods;
};

/// Shared-problem comparison: trial t's problem is generated from
/// (seed, t) and every method sees it; method randomness is seeded by
/// (seed, t, method name), so report contents do not depend on the order
/// methods run in.  Per-trial failures are counted, not fatal.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

/// q in [0,1] by linear interpolation over the sorted values.
double quantile(std::vector<double> values, double q);

/// Aligned text table of a report.
std::string format_report(const BenchmarkReport& report);

/// CSV (one row per method) of a report.
std::string report_csv(const BenchmarkReport& report);

/// The published comparison matrix: gibbs/sa/ii at 10 and 50 sweeps for
/// block widths 1 and 2, greedy filter, and pf at several particle counts.
std::vector<MethodSpec> default_method_matrix();

} // namespace tatum
