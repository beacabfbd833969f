#include "tatum/tempo_model.hpp"

#include <cmath>
#include <string>

#include "tatum/rng.hpp"

namespace tatum {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

} // namespace

TempoParams default_params() {
    TempoParams p;
    p.a_coeffs = Eigen::MatrixXd::Constant(1, 1, -0.072);
    return p;
}

void validate(const TempoParams& p) {
    if (p.dim < 2) throw DimensionError("state dimension must be >= 2");
    if (static_cast<int>(p.q_delta.size()) != p.dim - 1)
        throw DimensionError("q_delta needs one entry per tempo dimension");
    if (p.dim > 2 &&
        (p.a_coeffs.rows() != p.dim - 2 || p.a_coeffs.cols() != p.dim - 2))
        throw DimensionError("a_coeffs must be (D-2)x(D-2)");
    if (!(p.q_tau > 0) || !(p.r > 0) || !(p.r_off > 0) || !(p.r_outlier > 0))
        throw DimensionError("noise variances must be > 0");
    for (double q : p.q_delta)
        if (!(q > 0)) throw DimensionError("noise variances must be > 0");
    if (!(p.prior_delta_var > 0) || !(p.prior_tau_var > 0))
        throw DimensionError("prior variances must be > 0");
}

Eigen::MatrixXd transition_matrix(double gamma, const TempoParams& p) {
    validate(p);
    if (gamma < 0) throw DimensionError("negative interval");
    const int D = p.dim;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(D, D);
    A(0, 0) = 1.0;
    A(0, 1) = gamma;
    A(1, 1) = 1.0;
    if (D >= 3) {
        A(0, 2) = gamma;
        A.block(2, 2, D - 2, D - 2) = p.a_coeffs;
    }
    return A;
}

Eigen::MatrixXd transition_matrix(const Rational& gamma, const TempoParams& p) {
    if (gamma < Rational(0)) throw DimensionError("negative interval");
    return transition_matrix(gamma.value(), p);
}

Eigen::VectorXd period_selector(const TempoParams& p) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(p.dim);
    s[1] = 1.0;
    if (p.dim >= 3) s[2] = 1.0;
    return s;
}

double observation_variance(EventKind kind, const TempoParams& p) {
    switch (kind) {
        case EventKind::onset: return p.r;
        case EventKind::offset: return p.r_off;
        case EventKind::outlier: return p.r_outlier;
    }
    throw DimensionError("unknown event kind");
}

GaussianPotential observe_potential(double value, EventKind kind,
                                    const TempoParams& p, int slice) {
    const double var = observation_variance(kind, p);
    GaussianPotential pot;
    pot.labels = {state_var(slice, 0)};
    pot.h = Eigen::VectorXd::Constant(1, value / var);
    pot.K = Eigen::MatrixXd::Constant(1, 1, 1.0 / var);
    pot.g = -0.5 * (kLog2Pi + std::log(var)) - 0.5 * value * value / var;
    return pot;
}

namespace {

Eigen::MatrixXd process_noise(const TempoParams& p) {
    Eigen::VectorXd q(p.dim);
    q[0] = p.q_tau;
    for (int i = 0; i < p.dim - 1; ++i) q[i + 1] = p.q_delta[i];
    return q.asDiagonal();
}

} // namespace

GaussianPotential transition_potential(const Rational& gamma,
                                       const TempoParams& p, int slice) {
    const Eigen::MatrixXd A = transition_matrix(gamma, p);
    const Eigen::MatrixXd Q = process_noise(p);
    Eigen::VectorXd qinv_diag(p.dim);
    double log_det_q = 0.0;
    for (int i = 0; i < p.dim; ++i) {
        qinv_diag[i] = 1.0 / Q(i, i);
        log_det_q += std::log(Q(i, i));
    }
    const Eigen::MatrixXd Qinv = qinv_diag.asDiagonal();
    const int D = p.dim;
    GaussianPotential pot;
    pot.labels = slice_vars(slice - 1, D);
    for (VarId v : slice_vars(slice, D)) pot.labels.push_back(v);
    pot.h = Eigen::VectorXd::Zero(2 * D);
    pot.K = Eigen::MatrixXd::Zero(2 * D, 2 * D);
    pot.K.topLeftCorner(D, D) = A.transpose() * Qinv * A;
    pot.K.topRightCorner(D, D) = -A.transpose() * Qinv;
    pot.K.bottomLeftCorner(D, D) = -Qinv * A;
    pot.K.bottomRightCorner(D, D) = Qinv;
    pot.g = -0.5 * (D * kLog2Pi + log_det_q);
    return pot;
}

GaussianPotential state_prior_potential(const TempoParams& p) {
    validate(p);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p.dim);
    mean[1] = p.prior_delta_mean;
    Eigen::VectorXd var(p.dim);
    var[0] = p.prior_tau_var;
    for (int i = 1; i < p.dim; ++i) var[i] = p.prior_delta_var;
    return from_moments(slice_vars(0, p.dim), mean,
                        Eigen::MatrixXd(var.asDiagonal()));
}

SimulateResult simulate(const Score& score, const TempoParams& p,
                        const SimulateOptions& options, std::uint64_t seed) {
    validate(p);
    if (options.forced_delta && p.dim != 2)
        throw DimensionError("forced tempo path only supported for D = 2");
    const int K = score.intervals();
    if (options.forced_delta &&
        static_cast<int>(options.forced_delta->size()) < K)
        throw DimensionError("forced tempo path shorter than the score");

    Rng rng(seed);
    const bool tau_noise = options.mode == NoiseMode::full;
    const bool delta_noise = options.mode != NoiseMode::noiseless;
    const bool obs_noise = options.mode != NoiseMode::noiseless;

    SimulateResult res;
    res.latent.resize(K + 1, p.dim);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(p.dim);
    z[1] = p.prior_delta_mean;
    if (tau_noise) z[0] = rng.normal(0.0, p.prior_tau_var);
    if (delta_noise)
        for (int i = 1; i < p.dim; ++i)
            z[i] = rng.normal(i == 1 ? p.prior_delta_mean : 0.0, p.prior_delta_var);
    if (options.forced_delta) z[1] = (*options.forced_delta)[0];

    const Eigen::VectorXd sel = period_selector(p);
    for (int k = 0; k <= K; ++k) {
        if (k > 0) {
            const double gamma = score.gammas[k - 1].value();
            if (gamma < 0) throw DimensionError("negative interval");
            const Eigen::MatrixXd A = transition_matrix(gamma, p);
            z = (A * z).eval();
            if (tau_noise) z[0] += rng.normal(0.0, p.q_tau);
            if (delta_noise)
                for (int i = 1; i < p.dim; ++i)
                    z[i] += rng.normal(0.0, p.q_delta[i - 1]);
            if (options.forced_delta && k < static_cast<int>(options.forced_delta->size()))
                z[1] = (*options.forced_delta)[k];
        }
        res.latent.row(k) = z.transpose();
        res.tau.push_back(z[0]);
        res.period.push_back(sel.dot(z));
        const double eps = obs_noise ? rng.normal(0.0, p.r) : 0.0;
        res.onsets.times.push_back(z[0] + eps);
    }
    return res;
}

std::vector<Rational> candidate_gammas(const GaussianPotential& filtered,
                                       double y, EventKind kind,
                                       const std::vector<Rational>& grid,
                                       const TempoParams& p,
                                       double mass_threshold) {
    if (grid.empty()) throw DimensionError("empty interval grid");
    Moments m = to_moments(filtered);
    const double r = observation_variance(kind, p);
    std::vector<double> log_pred(grid.size());
    double best = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < grid.size(); ++i) {
        const Eigen::MatrixXd A = transition_matrix(grid[i], p);
        const Eigen::VectorXd a = A.row(0).transpose();
        const double mean = a.dot(m.mean);
        const double var = a.dot(m.cov * a) + p.q_tau + r;
        const double d = y - mean;
        log_pred[i] = -0.5 * (kLog2Pi + std::log(var)) - 0.5 * d * d / var;
        best = std::max(best, log_pred[i]);
    }
    std::vector<Rational> out;
    const double cut =
        mass_threshold > 0 ? best + std::log(mass_threshold)
                           : -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < grid.size(); ++i)
        if (log_pred[i] >= cut || log_pred[i] == best) out.push_back(grid[i]);
    return out;
}

ClampedLds build_lds(const TempoParams& p, const Score& score,
                     const OnsetSequence& onsets) {
    validate(p);
    const int K = score.intervals();
    if (onsets.size() != K + 1)
        throw DimensionError("onset count must be score intervals + 1");
    ClampedLds out;
    out.spec.A = Eigen::MatrixXd::Identity(p.dim, p.dim);
    out.spec.C = Eigen::MatrixXd::Zero(1, p.dim);
    out.spec.C(0, 0) = 1.0;
    out.spec.Q = process_noise(p);
    out.spec.R = Eigen::MatrixXd::Constant(1, 1, p.r);
    out.spec.prior_mean = Eigen::VectorXd::Zero(p.dim);
    out.spec.prior_mean[1] = p.prior_delta_mean;
    Eigen::VectorXd var(p.dim);
    var[0] = p.prior_tau_var;
    for (int i = 1; i < p.dim; ++i) var[i] = p.prior_delta_var;
    out.spec.prior_cov = var.asDiagonal();

    for (int k = 0; k <= K; ++k) {
        out.seq.y.push_back(Eigen::VectorXd::Constant(1, onsets.times[k]));
        out.seq.R_seq.push_back(Eigen::MatrixXd::Constant(
            1, 1, observation_variance(onsets.kind(k), p)));
        if (k > 0)
            out.seq.A_seq.push_back(transition_matrix(score.gammas[k - 1], p));
    }
    return out;
}

double score_log_joint(const Score& score, const OnsetSequence& onsets,
                       const TempoParams& params, const ScorePrior& prior) {
    ClampedLds clamped = build_lds(params, score, onsets);
    MessageSet msgs;
    const double loglik = forward_pass(clamped.spec, clamped.seq, msgs);
    return loglik + log_prior_score(score, prior);
}

} // namespace tatum
