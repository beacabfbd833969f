#pragma once

#include <optional>
#include <vector>

#include "tatum/gaussian.hpp"

namespace tatum {

/// Labels for state dimension `dim` of time slice `slice`.  Up to 16 state
/// dimensions per slice; slices are otherwise unbounded.
inline VarId state_var(int slice, int dim) {
    return static_cast<VarId>(slice) * 16 + dim;
}

/// All labels of one slice for a D-dimensional state.
std::vector<VarId> slice_vars(int slice, int state_dim);

/// Linear dynamical system
///
///   z_t = A_t z_{t-1} + zeta,  zeta ~ N(0, Q)
///   y_t = C z_t + eps,         eps  ~ N(0, R_t)
///
/// with Gaussian prior z_0 ~ N(prior_mean, prior_cov).  A and R may vary
/// per step (sequence-level overrides); Q, C and the prior are shared.
struct LdsSpec {
    Eigen::MatrixXd A;      // D x D, used when a sequence has no A_seq
    Eigen::MatrixXd C;      // m x D
    Eigen::MatrixXd Q;      // D x D
    Eigen::MatrixXd R;      // m x m, used when a sequence has no R_seq
    Eigen::VectorXd prior_mean;
    Eigen::MatrixXd prior_cov;

    int state_dim() const { return static_cast<int>(Q.rows()); }
    int obs_dim() const { return static_cast<int>(C.rows()); }
};

/// One observed sequence.  A_seq, when present, has T-1 entries (transition
/// into slice t uses A_seq[t-1]); R_seq, when present, has T entries.
struct LdsSequence {
    std::vector<Eigen::VectorXd> y;
    std::vector<Eigen::MatrixXd> A_seq;
    std::vector<Eigen::MatrixXd> R_seq;

    int length() const { return static_cast<int>(y.size()); }
};

/// Forward/backward message potentials, one per slice t = 0..T-1, all over
/// the labels of their slice:
///   alpha_pred[t] = p(y_{0:t-1}, z_t)         (prior at t = 0)
///   alpha_filt[t] = p(y_{0:t}, z_t)
///   beta[t]       = p(y_{t+1:T-1} | z_t)      (flat at t = T-1, improper
///                                              potentials in general)
struct MessageSet {
    std::vector<GaussianPotential> alpha_pred;
    std::vector<GaussianPotential> alpha_filt;
    std::vector<GaussianPotential> beta;
};

/// Runs the filter; fills alpha_pred/alpha_filt.  Returns log p(y_{0:T-1}).
double forward_pass(const LdsSpec& spec, const LdsSequence& seq, MessageSet& msgs);

/// Fills beta.  Returns log p(y_{0:T-1}) recovered from the backward side
/// (prior x beta[0] x local evidence at slice 0, integrated).
double backward_pass(const LdsSpec& spec, const LdsSequence& seq, MessageSet& msgs);

/// Posterior potential over slice k given the whole sequence:
/// alpha_filt[k] x beta[k].  Its log-integral equals the sequence
/// log-likelihood for every k.
GaussianPotential smooth(const MessageSet& msgs, int k);

/// Observation potential p(y_t = y | z_t) over the slice-t labels.
GaussianPotential observation_potential(const LdsSpec& spec, const LdsSequence& seq,
                                        int t);

/// Transition potential p(z_t | z_{t-1}) over the labels of both slices.
GaussianPotential transition_potential(const LdsSpec& spec, const LdsSequence& seq,
                                       int t);

/// Which parameters em_fit re-estimates.
struct EmOptions {
    bool fit_R = true;
    bool fit_Q_diag = true;
    enum class FitA {
        none,           // A fixed (per-step or constant)
        lower_block,    // free lower-right (D-2)x(D-2) block shared by all
                        // per-step transition matrices; rows above it fixed
        unconstrained,  // free constant A (sequences must not carry A_seq)
    } fit_A = FitA::none;
    double tol = 1e-7;   // stop when total log-likelihood improves less
    int max_iter = 200;
};

struct EmResult {
    LdsSpec spec;                       // updated parameters
    Eigen::MatrixXd lower_block;        // fitted block (empty when not fit)
    std::vector<double> loglik_trace;   // total log-likelihood per iteration,
                                        // evaluated at that iteration's input
    std::vector<LdsSequence> sequences; // A_seq rewritten with fitted block
};

/// Expectation-maximization over the selected parameters, exact E-step via
/// the two-pass messages.  The trace is non-decreasing.
EmResult em_fit(const LdsSpec& spec0, std::vector<LdsSequence> dataset,
                const EmOptions& options);

} // namespace tatum
