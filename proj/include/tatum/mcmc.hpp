#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tatum/rng.hpp"
#include "tatum/score.hpp"
#include "tatum/tempo_model.hpp"

namespace tatum {

/// A fixed inference problem: events, model, prior, and the per-interval
/// candidate sets (size K; commonly K copies of one grid).
struct McmcProblem {
    OnsetSequence onsets;
    TempoParams params;
    ScorePrior prior;
    std::vector<std::vector<Rational>> supports;
    Rational c0 = Rational(0);

    int intervals() const { return static_cast<int>(supports.size()); }
};

/// K copies of `grid`, the uniform-support case.
std::vector<std::vector<Rational>> uniform_supports(const std::vector<Rational>& grid,
                                                    int intervals);

/// Sampler state: the current score, backward messages computed under it
/// (refreshed once per sweep), and the forward filter cache the sweep
/// extends as it scans.  alpha[s]/beta[s] live on slice s's labels.
struct SweepState {
    Score score;
    std::vector<GaussianPotential> alpha; // filtered, slices 0..K
    std::vector<GaussianPotential> beta;  // p(y_{s+1:K} | z_s), slices 0..K
    double log_posterior = 0.0;           // log p(score, y)
    double rho = 1.0;                     // inverse temperature of last sweep
};

/// Builds messages and the posterior value for an initial score.  The
/// score must draw every interval from its slice's support.
SweepState make_sweep_state(const McmcProblem& problem, const Score& init);

/// Unnormalized log-masses of every assignment of the L intervals starting
/// at `begin` (0-based into score.gammas), all other intervals held at the
/// state's current values.  Assignments enumerate the supports in
/// lexicographic order with the last slice fastest.  Requires state.alpha
/// valid through slice `begin` and state.beta through slice `begin + L`.
/// Each mass is the joint p(modified score, y): forward extension through
/// the block times the cached backward message, times the score prior of
/// the modified sequence.
std::vector<double> slice_proposal(const McmcProblem& problem, const SweepState& state,
                                   int begin, int block);

/// One tempered sweep: refreshes beta under the incoming score, then scans
/// blocks of `block` intervals left to right (final block ragged), sampling
/// each from slice_proposal raised to the power rho (rho = +infinity takes
/// the argmax; ties break to the lexicographically smallest assignment).
/// Returns whether any interval changed.
bool gibbs_sweep(const McmcProblem& problem, SweepState& state, int block, double rho,
                 Rng& rng);

struct TraceRow {
    int sweep = 0;
    double rho = 1.0;
    double log_posterior = 0.0;
    double best_so_far = 0.0;
};

struct RunResult {
    Score best;
    double best_log_posterior = 0.0;
    std::vector<TraceRow> trace;
};

/// Published annealing shape scaled to a sweep budget: linear inverse
/// temperature 0.1 -> 10 over the first two thirds, then +infinity.
std::vector<double> default_sa_schedule(int sweeps = 50);

/// How restarts after the first pick their starting score.
enum class ReinitMode { greedy_filter, sample_proposal };

/// Deterministic one-particle filter that always extends with the highest
/// scoring interval; the standard cheap initializer.
Score greedy_filter_init(const McmcProblem& problem);

/// Simulated annealing over the rho schedule.  Returns the best score
/// visited (including the initial one).
RunResult run_sa(const McmcProblem& problem, const std::vector<double>& schedule,
                 int block, std::optional<Score> init, std::uint64_t seed);

/// Iterative improvement: rho = +infinity sweeps until a sweep changes
/// nothing, restarted `restarts` times.
RunResult run_ii(const McmcProblem& problem, int restarts, int block,
                 ReinitMode reinit, std::optional<Score> init, std::uint64_t seed);

} // namespace tatum
