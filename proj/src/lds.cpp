#include "tatum/lds.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace tatum {

namespace {

const Eigen::MatrixXd& step_A(const LdsSpec& spec, const LdsSequence& seq, int t) {
    if (!seq.A_seq.empty()) {
        if (static_cast<int>(seq.A_seq.size()) != seq.length() - 1)
            throw DimensionError("A_seq must have T-1 entries");
        return seq.A_seq[t - 1];
    }
    return spec.A;
}

const Eigen::MatrixXd& step_R(const LdsSpec& spec, const LdsSequence& seq, int t) {
    if (!seq.R_seq.empty()) {
        if (static_cast<int>(seq.R_seq.size()) != seq.length())
            throw DimensionError("R_seq must have T entries");
        return seq.R_seq[t];
    }
    return spec.R;
}

Eigen::MatrixXd inverse_pd(const Eigen::MatrixXd& m, const char* what) {
    Eigen::LDLT<Eigen::MatrixXd> f(m);
    if (f.info() != Eigen::Success)
        throw SingularError(std::string(what) + ": factorization failed");
    for (Eigen::Index i = 0; i < f.vectorD().size(); ++i)
        if (!(f.vectorD()[i] > kPivotTol))
            throw SingularError(std::string(what) + ": not positive definite");
    Eigen::MatrixXd inv = f.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    return ((inv + inv.transpose()) * 0.5).eval();
}

double logdet_pd(const Eigen::MatrixXd& m, const char* what) {
    Eigen::LDLT<Eigen::MatrixXd> f(m);
    if (f.info() != Eigen::Success)
        throw SingularError(std::string(what) + ": factorization failed");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < f.vectorD().size(); ++i) {
        if (!(f.vectorD()[i] > kPivotTol))
            throw SingularError(std::string(what) + ": not positive definite");
        acc += std::log(f.vectorD()[i]);
    }
    return acc;
}

constexpr double kLog2Pi = 1.8378770664093454836;

} // namespace

std::vector<VarId> slice_vars(int slice, int state_dim) {
    std::vector<VarId> v;
    v.reserve(state_dim);
    for (int d = 0; d < state_dim; ++d) v.push_back(state_var(slice, d));
    return v;
}

GaussianPotential observation_potential(const LdsSpec& spec, const LdsSequence& seq,
                                        int t) {
    const Eigen::MatrixXd& R = step_R(spec, seq, t);
    const Eigen::MatrixXd Rinv = inverse_pd(R, "observation noise");
    const Eigen::VectorXd& y = seq.y[t];
    if (y.size() != spec.obs_dim())
        throw DimensionError("observation size disagrees with C");
    GaussianPotential p;
    p.labels = slice_vars(t, spec.state_dim());
    p.h = spec.C.transpose() * (Rinv * y);
    p.K = spec.C.transpose() * Rinv * spec.C;
    p.g = -0.5 * (R.rows() * kLog2Pi + logdet_pd(R, "observation noise"))
          - 0.5 * y.dot(Rinv * y);
    return p;
}

GaussianPotential transition_potential(const LdsSpec& spec, const LdsSequence& seq,
                                       int t) {
    const Eigen::MatrixXd& A = step_A(spec, seq, t);
    const Eigen::MatrixXd Qinv = inverse_pd(spec.Q, "transition noise");
    const int D = spec.state_dim();
    GaussianPotential p;
    p.labels = slice_vars(t - 1, D);
    for (VarId v : slice_vars(t, D)) p.labels.push_back(v);
    p.h = Eigen::VectorXd::Zero(2 * D);
    p.K = Eigen::MatrixXd::Zero(2 * D, 2 * D);
    p.K.topLeftCorner(D, D) = A.transpose() * Qinv * A;
    p.K.topRightCorner(D, D) = -A.transpose() * Qinv;
    p.K.bottomLeftCorner(D, D) = -Qinv * A;
    p.K.bottomRightCorner(D, D) = Qinv;
    p.g = -0.5 * (D * kLog2Pi + logdet_pd(spec.Q, "transition noise"));
    return p;
}

double forward_pass(const LdsSpec& spec, const LdsSequence& seq, MessageSet& msgs) {
    const int T = seq.length();
    if (T == 0) throw DimensionError("empty sequence");
    msgs.alpha_pred.assign(T, {});
    msgs.alpha_filt.assign(T, {});
    msgs.alpha_pred[0] = from_moments(slice_vars(0, spec.state_dim()),
                                      spec.prior_mean, spec.prior_cov);
    for (int t = 0; t < T; ++t) {
        if (t > 0) {
            GaussianPotential joint =
                multiply(msgs.alpha_filt[t - 1], transition_potential(spec, seq, t));
            msgs.alpha_pred[t] = marginalize(joint, slice_vars(t, spec.state_dim()));
        }
        msgs.alpha_filt[t] =
            multiply(msgs.alpha_pred[t], observation_potential(spec, seq, t));
    }
    return log_integral(msgs.alpha_filt[T - 1]);
}

double backward_pass(const LdsSpec& spec, const LdsSequence& seq, MessageSet& msgs) {
    const int T = seq.length();
    if (T == 0) throw DimensionError("empty sequence");
    msgs.beta.assign(T, {});
    msgs.beta[T - 1] = GaussianPotential::flat(slice_vars(T - 1, spec.state_dim()));
    for (int t = T - 1; t > 0; --t) {
        GaussianPotential at_t =
            multiply(observation_potential(spec, seq, t), msgs.beta[t]);
        GaussianPotential joint = multiply(transition_potential(spec, seq, t), at_t);
        msgs.beta[t - 1] = marginalize(joint, slice_vars(t - 1, spec.state_dim()));
    }
    GaussianPotential prior = from_moments(slice_vars(0, spec.state_dim()),
                                           spec.prior_mean, spec.prior_cov);
    GaussianPotential at_0 =
        multiply(multiply(prior, observation_potential(spec, seq, 0)), msgs.beta[0]);
    return log_integral(at_0);
}

GaussianPotential smooth(const MessageSet& msgs, int k) {
    if (k < 0 || k >= static_cast<int>(msgs.alpha_filt.size()) ||
        msgs.beta.size() != msgs.alpha_filt.size())
        throw DimensionError("smooth: messages missing for slice");
    return multiply(msgs.alpha_filt[k], msgs.beta[k]);
}

namespace {

/// Per-step second moments of the smoothing posterior, gathered once per
/// EM iteration.
struct EStats {
    // observation side, per slice
    std::vector<Eigen::VectorXd> mean;   // E[z_t]
    std::vector<Eigen::MatrixXd> zz;     // E[z_t z_t']
    // transition side, per slice t >= 1
    std::vector<Eigen::MatrixXd> z10;    // E[z_t z_{t-1}']
    std::vector<Eigen::MatrixXd> z00;    // E[z_{t-1} z_{t-1}']
};

EStats estep(const LdsSpec& spec, const LdsSequence& seq, const MessageSet& msgs) {
    const int T = seq.length();
    const int D = spec.state_dim();
    EStats s;
    s.mean.resize(T);
    s.zz.resize(T);
    s.z10.assign(T, Eigen::MatrixXd());
    s.z00.assign(T, Eigen::MatrixXd());
    for (int t = 0; t < T; ++t) {
        Moments m = to_moments(smooth(msgs, t));
        s.mean[t] = m.mean;
        s.zz[t] = m.cov + m.mean * m.mean.transpose();
    }
    for (int t = 1; t < T; ++t) {
        GaussianPotential joint = multiply(
            multiply(msgs.alpha_filt[t - 1], transition_potential(spec, seq, t)),
            multiply(observation_potential(spec, seq, t), msgs.beta[t]));
        Moments m = to_moments(joint);
        // labels: slice t-1 dims then slice t dims
        Eigen::MatrixXd full = m.cov + m.mean * m.mean.transpose();
        s.z00[t] = full.topLeftCorner(D, D);
        s.z10[t] = full.bottomLeftCorner(D, D); // E[z_t z_{t-1}']
    }
    return s;
}

} // namespace

EmResult em_fit(const LdsSpec& spec0, std::vector<LdsSequence> dataset,
                const EmOptions& options) {
    if (dataset.empty()) throw DimensionError("em_fit: empty dataset");
    const int D = spec0.state_dim();
    const int m = spec0.obs_dim();
    if (options.fit_A == EmOptions::FitA::lower_block && D < 3)
        throw DimensionError("em_fit: lower block requires at least 3 state dims");
    if (options.fit_A == EmOptions::FitA::unconstrained)
        for (const auto& seq : dataset)
            if (!seq.A_seq.empty())
                throw DimensionError("em_fit: unconstrained A with per-step A_seq");

    EmResult res;
    res.spec = spec0;
    res.sequences = std::move(dataset);

    double prev_total = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < options.max_iter; ++iter) {
        // E-step under current parameters
        double total = 0.0;
        std::vector<EStats> all_stats;
        all_stats.reserve(res.sequences.size());
        for (auto& seq : res.sequences) {
            MessageSet msgs;
            total += forward_pass(res.spec, seq, msgs);
            backward_pass(res.spec, seq, msgs);
            all_stats.push_back(estep(res.spec, seq, msgs));
        }
        res.loglik_trace.push_back(total);
        if (total - prev_total < options.tol && iter > 0) break;
        prev_total = total;

        // M-step.  Rows of A decouple because Q is diagonal in the modes
        // that refit A; R and Q are averages of expected squared residuals.
        if (options.fit_A == EmOptions::FitA::lower_block) {
            const int B = D - 2;
            Eigen::MatrixXd S00 = Eigen::MatrixXd::Zero(B, B);
            Eigen::MatrixXd S10 = Eigen::MatrixXd::Zero(B, B);
            for (size_t i = 0; i < res.sequences.size(); ++i) {
                const auto& st = all_stats[i];
                for (int t = 1; t < res.sequences[i].length(); ++t) {
                    S00 += st.z00[t].block(2, 2, B, B);
                    S10 += st.z10[t].block(2, 2, B, B);
                }
            }
            res.lower_block = S10 * inverse_pd(S00, "em lower-block normal matrix");
            for (auto& seq : res.sequences)
                for (auto& A : seq.A_seq)
                    A.block(2, 2, B, B) = res.lower_block;
            res.spec.A.block(2, 2, B, B) = res.lower_block;
        } else if (options.fit_A == EmOptions::FitA::unconstrained) {
            Eigen::MatrixXd S00 = Eigen::MatrixXd::Zero(D, D);
            Eigen::MatrixXd S10 = Eigen::MatrixXd::Zero(D, D);
            for (size_t i = 0; i < res.sequences.size(); ++i) {
                const auto& st = all_stats[i];
                for (int t = 1; t < res.sequences[i].length(); ++t) {
                    S00 += st.z00[t];
                    S10 += st.z10[t];
                }
            }
            res.spec.A = S10 * inverse_pd(S00, "em A normal matrix");
        }

        if (options.fit_Q_diag) {
            Eigen::VectorXd q = Eigen::VectorXd::Zero(D);
            long n_trans = 0;
            for (size_t i = 0; i < res.sequences.size(); ++i) {
                const auto& seq = res.sequences[i];
                const auto& st = all_stats[i];
                for (int t = 1; t < seq.length(); ++t) {
                    const Eigen::MatrixXd& A = step_A(res.spec, seq, t);
                    Eigen::MatrixXd E = st.zz[t] - A * st.z10[t].transpose()
                                        - st.z10[t] * A.transpose()
                                        + A * st.z00[t] * A.transpose();
                    q += E.diagonal();
                    ++n_trans;
                }
            }
            if (n_trans == 0)
                throw DimensionError("em_fit: no transitions to fit Q from");
            res.spec.Q = (q / static_cast<double>(n_trans)).asDiagonal();
        }

        if (options.fit_R) {
            Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
            long n_obs = 0;
            for (size_t i = 0; i < res.sequences.size(); ++i) {
                const auto& seq = res.sequences[i];
                if (!seq.R_seq.empty())
                    continue; // per-step overrides are fixed, not refit
                const auto& st = all_stats[i];
                const Eigen::MatrixXd& C = res.spec.C;
                for (int t = 0; t < seq.length(); ++t) {
                    r += seq.y[t] * seq.y[t].transpose()
                         - C * st.mean[t] * seq.y[t].transpose()
                         - seq.y[t] * st.mean[t].transpose() * C.transpose()
                         + C * st.zz[t] * C.transpose();
                    n_obs += 1;
                }
            }
            if (n_obs == 0)
                throw DimensionError("em_fit: no observations to fit R from");
            res.spec.R = r / static_cast<double>(n_obs);
        }
    }
    return res;
}

} // namespace tatum
