#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tatum/gaussian.hpp"
#include "tatum/lds.hpp"
#include "tatum/score.hpp"

namespace tatum {

/// What kind of event an observed time is, selecting its noise variance.
enum class EventKind { onset, offset, outlier };

/// Switching state-space model for expressive timing.  The continuous
/// state of slice k is z_k = (tau, delta_1, ..., delta_{D-1}): intended
/// onset time plus tempo components.  Between onsets,
///
///   tau_k   = tau_{k-1} + gamma_k (delta_1 + delta_2)   + noise q_tau
///   delta_1 = delta_1                                   + noise q_delta[0]
///   delta_j = (lower block) delta_block                 + noise q_delta[j-1]
///   y_k     = tau_k + eps,  var(eps) by event kind
///
/// For D = 2 the delta_2 term is absent and delta_1 alone is the period.
struct TempoParams {
    int dim = 3;
    Eigen::MatrixXd a_coeffs;      // (D-2)x(D-2) lower block; empty for D=2
    double q_tau = 0.008 * 0.008;
    std::vector<double> q_delta = {0.007 * 0.007, 0.050 * 0.050}; // D-1 entries
    double r = 0.013 * 0.013;      // onset observation variance
    double r_off = 0.013 * 0.013;  // offset observation variance
    double r_outlier = 2.0;
    double prior_delta_mean = 0.5;
    double prior_delta_var = 0.2 * 0.2;
    double prior_tau_var = 1e6;    // pseudo-flat first-onset prior
};

/// Footnote-level defaults for the three-dimensional model.
TempoParams default_params();

void validate(const TempoParams& params);

/// State transition matrix for one interval gamma (>= 0):
/// D = 2: [[1, g], [0, 1]]; D >= 3: first row [1, g, g, 0...], delta_1 row
/// [0, 1, 0...], then the lower block from a_coeffs.
Eigen::MatrixXd transition_matrix(const Rational& gamma, const TempoParams& params);
Eigen::MatrixXd transition_matrix(double gamma, const TempoParams& params);

/// Direction along which the state advances tau per unit gamma
/// (0, 1, 1, 0, ...): the effective period is this dotted with z.
Eigen::VectorXd period_selector(const TempoParams& params);

/// Observation variance for one event kind.
double observation_variance(EventKind kind, const TempoParams& params);

/// p(y = value | z_slice) as a potential on the slice's tau label alone.
GaussianPotential observe_potential(double value, EventKind kind,
                                    const TempoParams& params, int slice);

/// Transition potential p(z_slice | z_{slice-1}) for one interval.
GaussianPotential transition_potential(const Rational& gamma,
                                       const TempoParams& params, int slice);

/// Prior potential over slice 0 (pseudo-flat tau, tempo around
/// prior_delta_mean).
GaussianPotential state_prior_potential(const TempoParams& params);

/// Observed event times, in performance order (not necessarily monotone),
/// with their kinds.  kinds may be empty, meaning all onsets.
struct OnsetSequence {
    std::vector<double> times;
    std::vector<EventKind> kinds;

    int size() const { return static_cast<int>(times.size()); }
    EventKind kind(int k) const { return kinds.empty() ? EventKind::onset : kinds[k]; }
};

enum class NoiseMode {
    full,          // draw z_0 from the prior and all noises
    zeta_tau_zero, // tau noise suppressed; tau_0 at the prior mean
    noiseless,     // all noises zero; z_0 at the prior mean
};

struct SimulateOptions {
    NoiseMode mode = NoiseMode::full;
    // When set (D = 2 only) the tempo path is pinned to these values,
    // one per slice 0..K-1; slice K's tempo continues noiselessly.
    std::optional<std::vector<double>> forced_delta;
};

struct SimulateResult {
    OnsetSequence onsets;            // y_0..y_K
    Eigen::MatrixXd latent;          // (K+1) x D states z_0..z_K
    std::vector<double> tau;         // latent intended times
    std::vector<double> period;      // effective period per slice
};

/// Draws event times for a score.  Slice count is score.intervals() + 1.
SimulateResult simulate(const Score& score, const TempoParams& params,
                        const SimulateOptions& options, std::uint64_t seed);

/// Interval values whose one-step predictive likelihood of y is within
/// mass_threshold (relative to the best grid value) of the maximum.  The
/// best value always survives; threshold 0 keeps the whole grid.
/// `filtered` is the potential over the previous slice's state.
std::vector<Rational> candidate_gammas(const GaussianPotential& filtered,
                                       double y, EventKind kind,
                                       const std::vector<Rational>& grid,
                                       const TempoParams& params,
                                       double mass_threshold = 1e-8);

/// Clamped-score linear system: spec + sequence wired for the lds module.
struct ClampedLds {
    LdsSpec spec;
    LdsSequence seq;
};
ClampedLds build_lds(const TempoParams& params, const Score& score,
                     const OnsetSequence& onsets);

/// log p(y, score intervals | params): clamped Kalman likelihood plus the
/// score prior.  The joint MAP objective.
double score_log_joint(const Score& score, const OnsetSequence& onsets,
                       const TempoParams& params, const ScorePrior& prior);

} // namespace tatum
