#include "tatum/smc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tatum/mcmc.hpp"

namespace tatum {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& v) {
    double best = kNegInf;
    for (double x : v) best = std::max(best, x);
    if (!std::isfinite(best)) return best;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - best);
    return best + std::log(acc);
}

bool lex_less(const std::vector<Rational>& a, const std::vector<Rational>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

} // namespace

Rbpf::Rbpf(TempoParams params, ScorePrior prior, const std::vector<Rational>& grid,
           RbpfOptions options, std::uint64_t seed)
    : params_(std::move(params)),
      prior_(std::move(prior)),
      grid_(grid),
      options_(options),
      rng_(seed) {
    validate(params_);
    if (grid_.empty()) throw DimensionError("empty interval grid");
    if (options_.n_particles < 1) throw DimensionError("need at least one particle");
    std::sort(grid_.begin(), grid_.end());
    for (const Rational& gm : grid_)
        if (gm < Rational(0)) throw DimensionError("negative interval in grid");
}

void Rbpf::init(double y, EventKind kind) {
    if (step_ >= 0) throw DimensionError("filter already initialized");
    GaussianPotential phi0 =
        multiply(state_prior_potential(params_), observe_potential(y, kind, params_, 0));
    const double lw = log_integral(phi0); // log p(y_0)
    Particle p;
    p.phi = std::move(phi0);
    p.log_weight = lw;
    p.log_select = lw;
    p.log_prior_prefix = 0.0;
    p.c = options_.c0;
    // Deterministic modes enumerate from a single root; sampled modes carry
    // n_particles i.i.d. trajectory samples.
    const bool sampled = options_.selection == Selection::multinomial ||
                         options_.selection == Selection::hybrid;
    particles_.assign(sampled ? options_.n_particles : 1, p);
    log_evidence_ = lw;
    step_ = 0;
}

void Rbpf::step(double y, EventKind kind) {
    if (step_ < 0) throw DimensionError("filter not initialized");
    const int k = ++step_;
    const std::vector<VarId> next_vars = slice_vars(k, params_.dim);

    struct Tuple {
        int parent;
        Rational gamma;
        GaussianPotential phi;
        double log_q;        // log p(parent gammas, gamma, y_{0:k})
        double log_prior;    // prior prefix including gamma
    };
    std::vector<Tuple> tuples;
    std::vector<double> parent_marginal(particles_.size(), kNegInf);
    std::vector<double> parent_increment(particles_.size(), kNegInf);

    const bool prune = options_.prune_threshold > 0 &&
                       options_.selection != Selection::expand_all;
    for (size_t i = 0; i < particles_.size(); ++i) {
        const Particle& parent = particles_[i];
        const std::vector<Rational> cands =
            prune ? candidate_gammas(parent.phi, y, kind, grid_, params_,
                                     options_.prune_threshold)
                  : grid_;
        std::vector<double> per_s;
        per_s.reserve(cands.size());
        for (const Rational& s : cands) {
            Tuple t;
            t.parent = static_cast<int>(i);
            t.gamma = s;
            GaussianPotential moved = marginalize(
                multiply(parent.phi, transition_potential(s, params_, k)), next_vars);
            t.phi = multiply(moved, observe_potential(y, kind, params_, k));
            double log_z;
            try {
                log_z = log_integral(t.phi);
            } catch (const ImproperError&) {
                continue; // zero-mass extension
            }
            t.log_prior = parent.log_prior_prefix + log_prior_c(parent.c + s, prior_);
            t.log_q = log_z + t.log_prior;
            if (!std::isfinite(t.log_q)) continue;
            per_s.push_back(t.log_q);
            tuples.push_back(std::move(t));
        }
        parent_marginal[i] = log_sum_exp(per_s);
        parent_increment[i] = parent_marginal[i] - parent.log_weight;
    }
    if (tuples.empty())
        throw InfeasibleError("no feasible extension at step " + std::to_string(k));

    std::vector<double> log_q(tuples.size());
    for (size_t t = 0; t < tuples.size(); ++t) log_q[t] = tuples[t].log_q;
    if (!std::isfinite(log_sum_exp(log_q)))
        throw InfeasibleError("no feasible extension at step " + std::to_string(k));

    auto make_particle = [&](const Tuple& t, double log_select) {
        Particle np;
        const Particle& parent = particles_[t.parent];
        np.gammas = parent.gammas;
        np.gammas.push_back(t.gamma);
        np.phi = t.phi;
        np.log_weight = t.log_q;
        np.log_select = log_select;
        np.log_prior_prefix = t.log_prior;
        np.c = parent.c + t.gamma;
        return np;
    };

    // deterministic order for greedy ranking: mass desc, then parent index,
    // then interval value
    auto rank_less = [&](size_t a, size_t b) {
        if (tuples[a].log_q != tuples[b].log_q) return tuples[a].log_q > tuples[b].log_q;
        if (tuples[a].parent != tuples[b].parent) return tuples[a].parent < tuples[b].parent;
        return tuples[a].gamma < tuples[b].gamma;
    };

    std::vector<Particle> next;
    switch (options_.selection) {
        case Selection::expand_all: {
            next.reserve(tuples.size());
            for (const Tuple& t : tuples)
                if (std::isfinite(t.log_q)) next.push_back(make_particle(t, t.log_q));
            break;
        }
        case Selection::greedy: {
            std::vector<size_t> order(tuples.size());
            std::iota(order.begin(), order.end(), size_t{0});
            std::sort(order.begin(), order.end(), rank_less);
            const size_t n = std::min<size_t>(options_.n_particles, order.size());
            next.reserve(n);
            for (size_t j = 0; j < n; ++j) {
                const Tuple& t = tuples[order[j]];
                if (!std::isfinite(t.log_q)) break;
                next.push_back(make_particle(t, t.log_q));
            }
            break;
        }
        case Selection::multinomial:
        case Selection::hybrid: {
            next.reserve(options_.n_particles);
            int remaining = options_.n_particles;
            if (options_.selection == Selection::hybrid) {
                size_t best = 0;
                for (size_t t = 1; t < tuples.size(); ++t)
                    if (rank_less(t, best)) best = t;
                next.push_back(make_particle(tuples[best], tuples[best].log_q));
                --remaining;
            }
            for (int j = 0; j < remaining; ++j) {
                const int pick = rng_.pick_log_weighted(log_q);
                const Tuple& t = tuples[pick];
                next.push_back(make_particle(t, parent_marginal[t.parent]));
            }
            // running evidence: mean incremental mass over parents
            std::vector<double> inc;
            for (size_t i = 0; i < particles_.size(); ++i)
                if (std::isfinite(parent_increment[i])) inc.push_back(parent_increment[i]);
            log_evidence_ +=
                log_sum_exp(inc) - std::log(static_cast<double>(particles_.size()));
            break;
        }
    }
    particles_ = std::move(next);

    std::vector<Rational> support;
    for (const Particle& p : particles_) support.push_back(p.gammas.back());
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    supports_.push_back(std::move(support));
}

FilterEstimate Rbpf::estimate() const {
    if (particles_.empty()) throw DimensionError("no particles");
    const bool sampled = options_.selection == Selection::multinomial ||
                         options_.selection == Selection::hybrid;
    std::vector<double> log_w(particles_.size());
    for (size_t i = 0; i < particles_.size(); ++i)
        log_w[i] = sampled ? 0.0 : particles_[i].log_weight;
    const double log_total = log_sum_exp(log_w);

    FilterEstimate est;
    const Eigen::VectorXd sel = period_selector(params_);
    double m_tau = 0, m_per = 0, e_var_tau = 0, e_var_per = 0, e_sq_tau = 0, e_sq_per = 0;
    for (size_t i = 0; i < particles_.size(); ++i) {
        const double w = std::exp(log_w[i] - log_total);
        Moments m = to_moments(particles_[i].phi);
        const double tau = m.mean[0];
        const double per = sel.dot(m.mean);
        m_tau += w * tau;
        m_per += w * per;
        e_var_tau += w * m.cov(0, 0);
        e_var_per += w * sel.dot(m.cov * sel);
        e_sq_tau += w * tau * tau;
        e_sq_per += w * per * per;
    }
    est.tau_mean = m_tau;
    est.period_mean = m_per;
    est.tau_var = e_var_tau + e_sq_tau - m_tau * m_tau;
    est.period_var = e_var_per + e_sq_per - m_per * m_per;

    // trajectory-mass ESS, diagnostic
    std::vector<double> log_traj(particles_.size());
    for (size_t i = 0; i < particles_.size(); ++i)
        log_traj[i] = particles_[i].log_weight;
    const double lt = log_sum_exp(log_traj);
    double sum_sq = 0.0;
    for (double lw : log_traj) sum_sq += std::exp(2.0 * (lw - lt));
    est.ess = 1.0 / sum_sq;

    if (sampled) {
        est.log_evidence = log_evidence_;
    } else {
        est.log_evidence = lt; // exact in expand_all, truncated sum for greedy
    }
    return est;
}

Score Rbpf::map_score() const {
    if (particles_.empty()) throw DimensionError("no particles");
    const Particle* best = &particles_[0];
    for (const Particle& p : particles_) {
        if (p.log_weight > best->log_weight ||
            (p.log_weight == best->log_weight && lex_less(p.gammas, best->gammas)))
            best = &p;
    }
    Score score;
    score.gammas = best->gammas;
    score.c0 = options_.c0;
    return score;
}

Score refine_reduced(const Score& candidate,
                     const std::vector<std::vector<Rational>>& supports,
                     const OnsetSequence& onsets, const TempoParams& params,
                     const ScorePrior& prior, RefineMode mode,
                     const std::vector<double>& sa_schedule, std::uint64_t seed) {
    const int K = candidate.intervals();
    if (static_cast<int>(supports.size()) != K)
        throw DimensionError("refine_reduced: one support per interval required");
    for (int k = 0; k < K; ++k) {
        if (supports[k].empty())
            throw DimensionError("refine_reduced: empty support");
        if (std::find(supports[k].begin(), supports[k].end(), candidate.gammas[k]) ==
            supports[k].end())
            throw DimensionError("refine_reduced: candidate leaves its own support");
    }
    McmcProblem problem{onsets, params, prior, supports, candidate.c0};
    if (mode == RefineMode::ii) {
        RunResult r = run_ii(problem, 1, 1, ReinitMode::greedy_filter, candidate, seed);
        return r.best;
    }
    RunResult r = run_sa(problem, sa_schedule, 1, candidate, seed);
    return r.best;
}

} // namespace tatum
