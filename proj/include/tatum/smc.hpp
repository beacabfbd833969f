#pragma once

#include <cstdint>
#include <vector>

#include "tatum/rng.hpp"
#include "tatum/score.hpp"
#include "tatum/tempo_model.hpp"

namespace tatum {

/// How the per-step tuple pool (particle x interval candidate) collapses
/// back to the particle budget.
enum class Selection {
    multinomial, // joint draw proportional to tuple mass; resampling built in
    greedy,      // keep the best N tuples without replacement
    hybrid,      // best tuple kept, the rest drawn multinomially
    expand_all,  // keep every tuple; the set grows (exactness oracle mode)
};

/// One survivor: an interval trajectory, its conditional Gaussian filter
/// state, and bookkeeping for fast prior extension.
struct Particle {
    std::vector<Rational> gammas;
    GaussianPotential phi;     // p(y_{0:k}, z_k | gammas), current slice labels
    double log_weight = 0.0;   // log p(gammas, y_{0:k}): joint trajectory mass
    double log_select = 0.0;   // selection-rule weight (parent-marginal mass
                               // after a multinomial draw, tuple mass otherwise)
    double log_prior_prefix = 0.0; // score prior of gammas
    Rational c;                    // current location c_0 + sum(gammas)
};

struct FilterEstimate {
    double tau_mean = 0.0;
    double tau_var = 0.0;
    double period_mean = 0.0;
    double period_var = 0.0;
    double log_evidence = 0.0; // estimate of log p(y_{0:k})
    double ess = 0.0;          // effective sample size of trajectory weights
};

struct RbpfOptions {
    int n_particles = 100;
    Selection selection = Selection::multinomial;
    /// Relative predictive-mass cutoff handed to candidate_gammas; 0 keeps
    /// the whole grid.  Ignored (full grid) in expand_all mode.
    double prune_threshold = 1e-8;
    Rational c0 = Rational(0);
};

/// Switching Kalman filter over onset times with the score prior driving
/// the discrete interval choices.  Feed events one at a time; every
/// randomized choice comes from one sequential stream owned by the filter,
/// so a given seed fixes the whole run and any prefix of it.
class Rbpf {
public:
    Rbpf(TempoParams params, ScorePrior prior, const std::vector<Rational>& grid,
         RbpfOptions options, std::uint64_t seed);

    /// Absorbs the first event; particles start as identical copies.
    void init(double y, EventKind kind = EventKind::onset);

    /// Extends every particle over the interval grid, scores the tuples,
    /// and selects survivors.  Throws InfeasibleError when every tuple has
    /// zero mass.
    void step(double y, EventKind kind = EventKind::onset);

    const std::vector<Particle>& particles() const { return particles_; }

    /// Distinct interval values selected at each step (reduced supports).
    const std::vector<std::vector<Rational>>& supports() const { return supports_; }

    /// Mixture moments of the filtering posterior over (tau, period).
    /// Equal particle weights after a multinomial/hybrid draw (the tuples
    /// were already drawn proportionally to mass); trajectory-mass weights
    /// for greedy/expand_all.
    FilterEstimate estimate() const;

    /// Trajectory with the highest joint mass; ties break to the
    /// lexicographically smallest interval sequence.
    Score map_score() const;

    int steps_taken() const { return step_; } // slices absorbed - 1

private:
    TempoParams params_;
    ScorePrior prior_;
    std::vector<Rational> grid_;
    RbpfOptions options_;
    Rng rng_;
    std::vector<Particle> particles_;
    std::vector<std::vector<Rational>> supports_;
    int step_ = -1;
    double log_evidence_ = 0.0;
};

enum class RefineMode { ii, sa };

/// Coordinate-wise refinement of a candidate score over the reduced
/// per-slice supports: iterative improvement (mode ii) or annealing with
/// the given rho schedule (mode sa).  The result never scores worse than
/// the candidate.
Score refine_reduced(const Score& candidate,
                     const std::vector<std::vector<Rational>>& supports,
                     const OnsetSequence& onsets, const TempoParams& params,
                     const ScorePrior& prior, RefineMode mode,
                     const std::vector<double>& sa_schedule, std::uint64_t seed);

} // namespace tatum
