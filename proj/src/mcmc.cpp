#include "tatum/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tatum {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_problem(const McmcProblem& problem) {
    validate(problem.params);
    const int K = problem.intervals();
    if (problem.onsets.size() != K + 1)
        throw DimensionError("onset count must be supports + 1");
    for (const auto& support : problem.supports) {
        if (support.empty()) throw DimensionError("empty interval support");
        for (const Rational& gm : support)
            if (gm < Rational(0)) throw DimensionError("negative interval in support");
    }
}

void check_member(const McmcProblem& problem, const Score& score) {
    if (score.intervals() != problem.intervals())
        throw DimensionError("score length disagrees with supports");
    for (int k = 0; k < score.intervals(); ++k)
        if (std::find(problem.supports[k].begin(), problem.supports[k].end(),
                      score.gammas[k]) == problem.supports[k].end())
            throw DimensionError("score interval outside its support");
}

/// alpha[s] -> alpha[s+1] under one interval value.
GaussianPotential extend_forward(const McmcProblem& problem,
                                 const GaussianPotential& alpha, const Rational& gamma,
                                 int slice) {
    GaussianPotential moved =
        marginalize(multiply(alpha, transition_potential(gamma, problem.params, slice)),
                    slice_vars(slice, problem.params.dim));
    return multiply(moved, observe_potential(problem.onsets.times[slice],
                                             problem.onsets.kind(slice),
                                             problem.params, slice));
}

void refresh_beta(const McmcProblem& problem, SweepState& state) {
    const int K = problem.intervals();
    const int D = problem.params.dim;
    state.beta.assign(K + 1, {});
    state.beta[K] = GaussianPotential::flat(slice_vars(K, D));
    for (int s = K; s >= 1; --s) {
        GaussianPotential at_s = multiply(
            observe_potential(problem.onsets.times[s], problem.onsets.kind(s),
                              problem.params, s),
            state.beta[s]);
        state.beta[s - 1] = marginalize(
            multiply(transition_potential(state.score.gammas[s - 1], problem.params, s),
                     at_s),
            slice_vars(s - 1, D));
    }
}

double forward_fill(const McmcProblem& problem, SweepState& state) {
    const int K = problem.intervals();
    state.alpha.assign(K + 1, {});
    state.alpha[0] = multiply(state_prior_potential(problem.params),
                              observe_potential(problem.onsets.times[0],
                                                problem.onsets.kind(0),
                                                problem.params, 0));
    for (int s = 1; s <= K; ++s)
        state.alpha[s] =
            extend_forward(problem, state.alpha[s - 1], state.score.gammas[s - 1], s);
    return log_integral(state.alpha[K]);
}

} // namespace

std::vector<std::vector<Rational>> uniform_supports(const std::vector<Rational>& grid,
                                                    int intervals) {
    std::vector<Rational> sorted = grid;
    std::sort(sorted.begin(), sorted.end());
    return std::vector<std::vector<Rational>>(intervals, sorted);
}

SweepState make_sweep_state(const McmcProblem& problem, const Score& init) {
    check_problem(problem);
    check_member(problem, init);
    SweepState state;
    state.score = init;
    const double loglik = forward_fill(problem, state);
    refresh_beta(problem, state);
    state.log_posterior = loglik + log_prior_score(state.score, problem.prior);
    return state;
}

std::vector<double> slice_proposal(const McmcProblem& problem, const SweepState& state,
                                   int begin, int block) {
    const int K = problem.intervals();
    if (begin < 0 || block < 1 || begin + block > K)
        throw DimensionError("slice_proposal: bad block");
    std::size_t combos = 1;
    for (int j = 0; j < block; ++j) combos *= problem.supports[begin + j].size();

    std::vector<double> out(combos, -kInf);
    std::vector<Rational> assignment(block);
    for (std::size_t idx = 0; idx < combos; ++idx) {
        std::size_t rest = idx;
        for (int j = block - 1; j >= 0; --j) {
            const auto& support = problem.supports[begin + j];
            assignment[j] = support[rest % support.size()];
            rest /= support.size();
        }
        GaussianPotential alpha = state.alpha[begin];
        bool dead = false;
        double log_z = 0.0;
        try {
            for (int j = 0; j < block; ++j)
                alpha = extend_forward(problem, alpha, assignment[j], begin + 1 + j);
            log_z = log_integral(multiply(alpha, state.beta[begin + block]));
        } catch (const ImproperError&) {
            dead = true;
        }
        if (dead || !std::isfinite(log_z)) continue;
        out[idx] =
            log_z + conditional_log_prior(state.score, begin, begin + block,
                                          assignment, problem.prior);
    }
    return out;
}

bool gibbs_sweep(const McmcProblem& problem, SweepState& state, int block, double rho,
                 Rng& rng) {
    check_problem(problem);
    check_member(problem, state.score);
    if (block < 1) throw DimensionError("block length must be >= 1");
    if (!(rho > 0)) throw DimensionError("rho must be > 0");
    const int K = problem.intervals();

    refresh_beta(problem, state);
    state.alpha.assign(K + 1, {});
    state.alpha[0] = multiply(state_prior_potential(problem.params),
                              observe_potential(problem.onsets.times[0],
                                                problem.onsets.kind(0),
                                                problem.params, 0));
    bool changed = false;
    for (int begin = 0; begin < K; begin += block) {
        const int len = std::min(block, K - begin);
        const std::vector<double> masses = slice_proposal(problem, state, begin, len);

        std::size_t pick;
        if (rho == kInf) {
            pick = 0;
            for (std::size_t i = 1; i < masses.size(); ++i)
                if (masses[i] > masses[pick]) pick = i;
            if (!std::isfinite(masses[pick]))
                throw InfeasibleError("infeasible block at interval " +
                                      std::to_string(begin));
        } else {
            double best = -kInf;
            for (double m : masses) best = std::max(best, m);
            if (!std::isfinite(best))
                throw InfeasibleError("infeasible block at interval " +
                                      std::to_string(begin));
            std::vector<double> tempered(masses.size());
            for (std::size_t i = 0; i < masses.size(); ++i)
                tempered[i] =
                    std::isfinite(masses[i]) ? rho * (masses[i] - best) : -kInf;
            pick = static_cast<std::size_t>(rng.pick_log_weighted(tempered));
        }

        std::size_t rest = pick;
        for (int j = len - 1; j >= 0; --j) {
            const auto& support = problem.supports[begin + j];
            const Rational value = support[rest % support.size()];
            rest /= support.size();
            if (!(value == state.score.gammas[begin + j])) changed = true;
            state.score.gammas[begin + j] = value;
        }
        for (int j = 0; j < len; ++j)
            state.alpha[begin + 1 + j] =
                extend_forward(problem, state.alpha[begin + j],
                               state.score.gammas[begin + j], begin + 1 + j);
    }
    state.rho = rho;
    state.log_posterior = log_integral(state.alpha[K]) +
                          log_prior_score(state.score, problem.prior);
    return changed;
}

std::vector<double> default_sa_schedule(int sweeps) {
    if (sweeps < 1) throw DimensionError("schedule needs at least one sweep");
    const int ramp = std::max(1, static_cast<int>(std::lround(sweeps * 33.0 / 50.0)));
    std::vector<double> schedule;
    schedule.reserve(sweeps);
    for (int i = 0; i < sweeps; ++i) {
        if (i < ramp)
            schedule.push_back(ramp == 1 ? 10.0
                                         : 0.1 + (10.0 - 0.1) * i / (ramp - 1));
        else
            schedule.push_back(kInf);
    }
    return schedule;
}

Score greedy_filter_init(const McmcProblem& problem) {
    check_problem(problem);
    const int K = problem.intervals();
    Score score;
    score.c0 = problem.c0;
    GaussianPotential alpha = multiply(
        state_prior_potential(problem.params),
        observe_potential(problem.onsets.times[0], problem.onsets.kind(0),
                          problem.params, 0));
    double log_prior_prefix = 0.0;
    Rational c = problem.c0;
    for (int s = 1; s <= K; ++s) {
        double best_mass = -kInf;
        const Rational* best_gamma = nullptr;
        GaussianPotential best_alpha;
        double best_prior = 0.0;
        for (const Rational& gm : problem.supports[s - 1]) {
            GaussianPotential next;
            double log_z;
            try {
                next = extend_forward(problem, alpha, gm, s);
                log_z = log_integral(next);
            } catch (const ImproperError&) {
                continue;
            }
            const double prior_term = log_prior_c(c + gm, problem.prior);
            const double mass = log_z + log_prior_prefix + prior_term;
            if (std::isfinite(mass) && mass > best_mass) {
                best_mass = mass;
                best_gamma = &gm;
                best_alpha = std::move(next);
                best_prior = log_prior_prefix + prior_term;
            }
        }
        if (best_gamma == nullptr)
            throw InfeasibleError("no feasible extension at interval " +
                                  std::to_string(s - 1));
        score.gammas.push_back(*best_gamma);
        c = c + *best_gamma;
        log_prior_prefix = best_prior;
        alpha = std::move(best_alpha);
    }
    return score;
}

namespace {

/// One-particle filter drawing each extension from the normalized
/// per-slice masses; randomized restart initializer.
Score sample_proposal_init(const McmcProblem& problem, Rng& rng) {
    const int K = problem.intervals();
    Score score;
    score.c0 = problem.c0;
    GaussianPotential alpha = multiply(
        state_prior_potential(problem.params),
        observe_potential(problem.onsets.times[0], problem.onsets.kind(0),
                          problem.params, 0));
    Rational c = problem.c0;
    for (int s = 1; s <= K; ++s) {
        const auto& support = problem.supports[s - 1];
        std::vector<double> masses(support.size(), -kInf);
        std::vector<GaussianPotential> nexts(support.size());
        for (std::size_t i = 0; i < support.size(); ++i) {
            try {
                nexts[i] = extend_forward(problem, alpha, support[i], s);
                masses[i] = log_integral(nexts[i]) + log_prior_c(c + support[i],
                                                                 problem.prior);
            } catch (const ImproperError&) {
            }
        }
        const int pick = rng.pick_log_weighted(masses);
        score.gammas.push_back(support[pick]);
        c = c + support[pick];
        alpha = std::move(nexts[pick]);
    }
    return score;
}

void record(RunResult& result, int sweep, const SweepState& state) {
    if (state.log_posterior > result.best_log_posterior) {
        result.best = state.score;
        result.best_log_posterior = state.log_posterior;
    }
    result.trace.push_back(
        {sweep, state.rho, state.log_posterior, result.best_log_posterior});
}

} // namespace

RunResult run_sa(const McmcProblem& problem, const std::vector<double>& schedule,
                 int block, std::optional<Score> init, std::uint64_t seed) {
    check_problem(problem);
    Rng rng(mix_seed(seed, "sa"));
    const Score start = init ? *init : greedy_filter_init(problem);
    SweepState state = make_sweep_state(problem, start);
    RunResult result;
    result.best = start;
    result.best_log_posterior = state.log_posterior;
    int sweep = 0;
    for (double rho : schedule) {
        gibbs_sweep(problem, state, block, rho, rng);
        record(result, ++sweep, state);
    }
    return result;
}

RunResult run_ii(const McmcProblem& problem, int restarts, int block,
                 ReinitMode reinit, std::optional<Score> init, std::uint64_t seed) {
    check_problem(problem);
    if (restarts < 1) throw DimensionError("need at least one restart");
    Rng rng(mix_seed(seed, "ii"));
    RunResult result;
    result.best_log_posterior = -kInf;
    int sweep = 0;
    for (int r = 0; r < restarts; ++r) {
        Score start;
        if (r == 0 && init) {
            start = *init;
        } else if (reinit == ReinitMode::greedy_filter) {
            start = greedy_filter_init(problem);
        } else {
            start = sample_proposal_init(problem, rng);
        }
        SweepState state = make_sweep_state(problem, start);
        if (result.trace.empty()) {
            result.best = start;
            result.best_log_posterior = state.log_posterior;
        }
        // rho = +inf never accepts a downhill move, so sweeps strictly
        // improve until a fixed point; the cap only guards degeneracy
        for (int guard = 0; guard < 10000; ++guard) {
            const bool changed = gibbs_sweep(problem, state, block, kInf, rng);
            record(result, ++sweep, state);
            if (!changed) break;
        }
    }
    return result;
}

} // namespace tatum
