#include "tatum/gaussian.hpp"

#include <atomic>
#include <cmath>
#include <unordered_map>

namespace tatum {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

std::atomic<std::uint64_t> g_op_count{0};

void count_op() { g_op_count.fetch_add(1, std::memory_order_relaxed); }

void check_domain(const GaussianPotential& p) {
    const int d = p.dim();
    if (p.h.size() != d || p.K.rows() != d || p.K.cols() != d)
        throw DimensionError("potential parameters disagree with label count");
}

/// LDLT of a symmetric block that must be positive definite; returns the
/// factorization and the log-determinant.  Pivots below kPivotTol reject.
struct PdFactor {
    Eigen::LDLT<Eigen::MatrixXd> ldlt;
    double log_det = 0.0;
};

PdFactor factor_pd(const Eigen::MatrixXd& m, const char* what) {
    PdFactor f;
    f.ldlt.compute(m);
    if (f.ldlt.info() != Eigen::Success)
        throw SingularError(std::string(what) + ": factorization failed");
    const auto& d = f.ldlt.vectorD();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (!(d[i] > kPivotTol))
            throw ImproperError(std::string(what) + ": block not positive definite");
        f.log_det += std::log(d[i]);
    }
    return f;
}

std::vector<int> positions_of(const GaussianPotential& p, const std::vector<VarId>& subset,
                              const char* what) {
    std::vector<int> pos;
    pos.reserve(subset.size());
    for (VarId v : subset) {
        int at = -1;
        for (int i = 0; i < p.dim(); ++i)
            if (p.labels[i] == v) { at = i; break; }
        if (at < 0)
            throw LabelError(std::string(what) + ": label not in domain");
        pos.push_back(at);
    }
    return pos;
}

} // namespace

GaussianPotential GaussianPotential::flat(std::vector<VarId> labels) {
    GaussianPotential p;
    const int d = static_cast<int>(labels.size());
    p.labels = std::move(labels);
    p.h = Eigen::VectorXd::Zero(d);
    p.K = Eigen::MatrixXd::Zero(d, d);
    p.g = 0.0;
    return p;
}

GaussianPotential from_moments(std::vector<VarId> labels,
                               const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& cov,
                               double log_scale) {
    const int d = static_cast<int>(labels.size());
    if (mean.size() != d || cov.rows() != d || cov.cols() != d)
        throw DimensionError("from_moments: size mismatch");
    GaussianPotential p;
    p.labels = std::move(labels);
    if (d == 0) {
        p.h = Eigen::VectorXd::Zero(0);
        p.K = Eigen::MatrixXd::Zero(0, 0);
        p.g = log_scale;
        return p;
    }
    PdFactor f = factor_pd(cov, "from_moments covariance");
    p.K = f.ldlt.solve(Eigen::MatrixXd::Identity(d, d));
    p.K = ((p.K + p.K.transpose()) * 0.5).eval();
    p.h = p.K * mean;
    // log|K| = -log|cov|
    p.g = log_scale - 0.5 * d * kLog2Pi + 0.5 * (-f.log_det)
          - 0.5 * p.h.dot(mean);
    return p;
}

Moments to_moments(const GaussianPotential& p) {
    check_domain(p);
    count_op();
    Moments m;
    const int d = p.dim();
    if (d == 0) {
        m.mean = Eigen::VectorXd::Zero(0);
        m.cov = Eigen::MatrixXd::Zero(0, 0);
        m.log_integral = p.g;
        return m;
    }
    PdFactor f = factor_pd(p.K, "to_moments precision");
    m.mean = f.ldlt.solve(p.h);
    m.cov = f.ldlt.solve(Eigen::MatrixXd::Identity(d, d));
    m.cov = ((m.cov + m.cov.transpose()) * 0.5).eval();
    m.log_integral = p.g + 0.5 * d * kLog2Pi - 0.5 * f.log_det
                     + 0.5 * p.h.dot(m.mean);
    return m;
}

double log_integral(const GaussianPotential& p) {
    check_domain(p);
    count_op();
    const int d = p.dim();
    if (d == 0) return p.g;
    PdFactor f = factor_pd(p.K, "log_integral precision");
    return p.g + 0.5 * d * kLog2Pi - 0.5 * f.log_det
           + 0.5 * p.h.dot(f.ldlt.solve(p.h));
}

double log_density(const GaussianPotential& p, const Eigen::VectorXd& x) {
    check_domain(p);
    if (x.size() != p.dim())
        throw DimensionError("log_density: point size mismatch");
    return p.g + p.h.dot(x) - 0.5 * x.dot(p.K * x);
}

GaussianPotential multiply(const GaussianPotential& a, const GaussianPotential& b) {
    check_domain(a);
    check_domain(b);
    count_op();
    GaussianPotential r;
    r.labels = a.labels;
    std::vector<int> b_pos(b.dim());
    for (int j = 0; j < b.dim(); ++j) {
        int at = -1;
        for (int i = 0; i < a.dim(); ++i)
            if (a.labels[i] == b.labels[j]) { at = i; break; }
        if (at < 0) {
            at = static_cast<int>(r.labels.size());
            r.labels.push_back(b.labels[j]);
        }
        b_pos[j] = at;
    }
    const int d = static_cast<int>(r.labels.size());
    r.h = Eigen::VectorXd::Zero(d);
    r.K = Eigen::MatrixXd::Zero(d, d);
    r.h.head(a.dim()) = a.h;
    r.K.topLeftCorner(a.dim(), a.dim()) = a.K;
    for (int j = 0; j < b.dim(); ++j) {
        r.h[b_pos[j]] += b.h[j];
        for (int j2 = 0; j2 < b.dim(); ++j2)
            r.K(b_pos[j], b_pos[j2]) += b.K(j, j2);
    }
    r.g = a.g + b.g;
    return r;
}

GaussianPotential marginalize(const GaussianPotential& p,
                              const std::vector<VarId>& keep) {
    check_domain(p);
    count_op();
    std::vector<int> keep_pos = positions_of(p, keep, "marginalize");
    std::vector<char> kept(p.dim(), 0);
    for (int i : keep_pos) {
        if (kept[i]) throw LabelError("marginalize: duplicate keep label");
        kept[i] = 1;
    }
    // stable: result follows p's own label order
    std::vector<int> idx1, idx2;
    for (int i = 0; i < p.dim(); ++i)
        (kept[i] ? idx1 : idx2).push_back(i);

    const int d1 = static_cast<int>(idx1.size());
    const int d2 = static_cast<int>(idx2.size());
    GaussianPotential r;
    r.labels.reserve(d1);
    for (int i : idx1) r.labels.push_back(p.labels[i]);
    if (d2 == 0) {
        r.h = p.h;
        r.K = p.K;
        r.g = p.g;
        // reorder to idx1 (identity here since all kept)
        return r;
    }
    Eigen::VectorXd h1(d1), h2(d2);
    Eigen::MatrixXd K11(d1, d1), K12(d1, d2), K22(d2, d2);
    for (int i = 0; i < d1; ++i) {
        h1[i] = p.h[idx1[i]];
        for (int j = 0; j < d1; ++j) K11(i, j) = p.K(idx1[i], idx1[j]);
        for (int j = 0; j < d2; ++j) K12(i, j) = p.K(idx1[i], idx2[j]);
    }
    for (int i = 0; i < d2; ++i) {
        h2[i] = p.h[idx2[i]];
        for (int j = 0; j < d2; ++j) K22(i, j) = p.K(idx2[i], idx2[j]);
    }
    PdFactor f = factor_pd(K22, "marginalize eliminated block");
    Eigen::VectorXd x2 = f.ldlt.solve(h2);
    Eigen::MatrixXd S = f.ldlt.solve(K12.transpose()); // K22^{-1} K21
    r.h = h1 - K12 * x2;
    r.K = K11 - K12 * S;
    r.K = ((r.K + r.K.transpose()) * 0.5).eval();
    r.g = p.g - 0.5 * (f.log_det - d2 * kLog2Pi) + 0.5 * h2.dot(x2);
    return r;
}

GaussianPotential condition(const GaussianPotential& p,
                            const std::vector<VarId>& observed,
                            const Eigen::VectorXd& values) {
    check_domain(p);
    count_op();
    if (values.size() != static_cast<Eigen::Index>(observed.size()))
        throw DimensionError("condition: values do not match observed labels");
    std::vector<int> obs_pos = positions_of(p, observed, "condition");
    std::vector<char> is_obs(p.dim(), 0);
    for (int i : obs_pos) {
        if (is_obs[i]) throw LabelError("condition: duplicate observed label");
        is_obs[i] = 1;
    }
    std::vector<int> idx1;
    for (int i = 0; i < p.dim(); ++i)
        if (!is_obs[i]) idx1.push_back(i);

    const int d1 = static_cast<int>(idx1.size());
    const int d2 = static_cast<int>(obs_pos.size());
    Eigen::VectorXd x2 = values;

    GaussianPotential r;
    r.labels.reserve(d1);
    for (int i : idx1) r.labels.push_back(p.labels[i]);
    r.h = Eigen::VectorXd::Zero(d1);
    r.K = Eigen::MatrixXd::Zero(d1, d1);
    Eigen::VectorXd h2(d2);
    Eigen::MatrixXd K22(d2, d2);
    for (int i = 0; i < d2; ++i) {
        h2[i] = p.h[obs_pos[i]];
        for (int j = 0; j < d2; ++j) K22(i, j) = p.K(obs_pos[i], obs_pos[j]);
    }
    for (int i = 0; i < d1; ++i) {
        double acc = p.h[idx1[i]];
        for (int j = 0; j < d2; ++j) acc -= p.K(idx1[i], obs_pos[j]) * x2[j];
        r.h[i] = acc;
        for (int j = 0; j < d1; ++j) r.K(i, j) = p.K(idx1[i], idx1[j]);
    }
    r.g = p.g + h2.dot(x2) - 0.5 * x2.dot(K22 * x2);
    return r;
}

std::uint64_t potential_op_count() { return g_op_count.load(std::memory_order_relaxed); }

void reset_potential_op_count() { g_op_count.store(0, std::memory_order_relaxed); }

} // namespace tatum
