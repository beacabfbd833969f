#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "tatum/errors.hpp"
#include "tatum/lds.hpp"
#include "tatum/mcmc.hpp"
#include "tatum/rng.hpp"
#include "oracles.hpp"

using namespace tatum;

namespace {

TempoParams tight_params() {
    TempoParams p = default_params();
    p.prior_tau_var = 1.0;
    p.prior_delta_var = 0.05 * 0.05;
    return p;
}

const std::vector<Rational> kGrid = {Rational(0), Rational(1, 2), Rational(1)};

ScorePrior grid_prior() { return make_depth_prior({default_binary_schema(1.0)}, {1.0}, kGrid); }

McmcProblem demo_problem() {
    OnsetSequence onsets;
    onsets.times = {0.02, 0.51, 1.03, 1.27, 1.78};
    return McmcProblem{onsets, tight_params(), grid_prior(),
                       uniform_supports(kGrid, 4)};
}

double logsumexp(const std::vector<double>& v) {
    double best = -std::numeric_limits<double>::infinity();
    for (double x : v) best = std::max(best, x);
    if (!std::isfinite(best)) return best;
    double s = 0.0;
    for (double x : v) s += std::exp(x - best);
    return best + std::log(s);
}

// normalized enumeration masses of a block, all other intervals clamped
std::vector<double> enumerated_block(const McmcProblem& problem, const Score& score,
                                     int begin, int block) {
    std::vector<std::vector<Rational>> block_supports(
        problem.supports.begin() + begin, problem.supports.begin() + begin + block);
    std::vector<double> masses;
    for (const auto& combo : oracle::assignments(block_supports)) {
        Score modified = score;
        for (int j = 0; j < block; ++j) modified.gammas[begin + j] = combo[j];
        double mass;
        try {
            mass = score_log_joint(modified, problem.onsets, problem.params,
                                   problem.prior);
        } catch (const OffGridError&) {
            mass = -std::numeric_limits<double>::infinity();
        }
        masses.push_back(mass);
    }
    return masses;
}

} // namespace

TEST_CASE("sweep state carries the joint posterior value") {
    const McmcProblem problem = demo_problem();
    Score init;
    init.gammas = {Rational(1), Rational(1), Rational(1, 2), Rational(1)};
    const SweepState state = make_sweep_state(problem, init);
    CHECK(state.log_posterior ==
          doctest::Approx(score_log_joint(init, problem.onsets, problem.params,
                                          problem.prior))
              .epsilon(1e-9));
    Score outside;
    outside.gammas = {Rational(1), Rational(1), Rational(1, 4), Rational(1)};
    CHECK_THROWS_AS(make_sweep_state(problem, outside), DimensionError);
}

TEST_CASE("single-slice proposals equal enumeration conditionals") {
    const McmcProblem problem = demo_problem();
    Score init;
    init.gammas = {Rational(1, 2), Rational(1), Rational(0), Rational(1)};
    const SweepState state = make_sweep_state(problem, init);
    for (int begin = 0; begin < 4; ++begin) {
        const std::vector<double> proposal = slice_proposal(problem, state, begin, 1);
        const std::vector<double> want = enumerated_block(problem, init, begin, 1);
        REQUIRE(proposal.size() == want.size());
        const double zp = logsumexp(proposal), zw = logsumexp(want);
        for (std::size_t i = 0; i < want.size(); ++i) {
            if (!std::isfinite(want[i])) {
                CHECK(!std::isfinite(proposal[i]));
            } else {
                CHECK(proposal[i] - zp == doctest::Approx(want[i] - zw).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("two-slice proposals enumerate the block lexicographically") {
    const McmcProblem problem = demo_problem();
    Score init;
    init.gammas = {Rational(1, 2), Rational(1), Rational(1), Rational(1, 2)};
    const SweepState state = make_sweep_state(problem, init);
    for (int begin : {0, 2}) {
        const std::vector<double> proposal = slice_proposal(problem, state, begin, 2);
        const std::vector<double> want = enumerated_block(problem, init, begin, 2);
        REQUIRE(proposal.size() == 9);
        const double zp = logsumexp(proposal), zw = logsumexp(want);
        for (std::size_t i = 0; i < want.size(); ++i) {
            if (!std::isfinite(want[i])) {
                CHECK(!std::isfinite(proposal[i]));
            } else {
                CHECK(proposal[i] - zp == doctest::Approx(want[i] - zw).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("proposal masses are absolute joints, not just proportional") {
    const McmcProblem problem = demo_problem();
    Score init;
    init.gammas = {Rational(1, 2), Rational(1, 2), Rational(1), Rational(1)};
    const SweepState state = make_sweep_state(problem, init);
    const std::vector<double> proposal = slice_proposal(problem, state, 1, 1);
    const std::vector<double> want = enumerated_block(problem, init, 1, 1);
    for (std::size_t i = 0; i < want.size(); ++i)
        if (std::isfinite(want[i]))
            CHECK(proposal[i] == doctest::Approx(want[i]).epsilon(1e-9));
}

TEST_CASE("the forward cache stays consistent across sweeps") {
    const McmcProblem problem = demo_problem();
    Score init;
    init.gammas = {Rational(1), Rational(1), Rational(1), Rational(1)};
    SweepState state = make_sweep_state(problem, init);
    Rng rng(123);
    for (int sweep = 0; sweep < 3; ++sweep) {
        gibbs_sweep(problem, state, 1, 1.0, rng);
        // rebuild alpha from scratch under the current score
        const ClampedLds lds = build_lds(problem.params, state.score, problem.onsets);
        MessageSet msgs;
        forward_pass(lds.spec, lds.seq, msgs);
        for (int k = 0; k <= problem.intervals(); ++k) {
            const Moments cached = to_moments(state.alpha[k]);
            const Moments fresh = to_moments(msgs.alpha_filt[k]);
            CHECK((cached.mean - fresh.mean).lpNorm<Eigen::Infinity>() < 1e-8);
            CHECK((cached.cov - fresh.cov).lpNorm<Eigen::Infinity>() < 1e-8);
        }
        CHECK(state.log_posterior ==
              doctest::Approx(score_log_joint(state.score, problem.onsets,
                                              problem.params, problem.prior))
                  .epsilon(1e-8));
    }
}

TEST_CASE("rho=1 visit frequencies match the enumerated posterior") {
    // K = 2 problem small enough to enumerate exactly
    OnsetSequence onsets;
    onsets.times = {0.0, 0.52, 1.01};
    const McmcProblem problem{onsets, tight_params(), grid_prior(),
                              uniform_supports(kGrid, 2)};
    // exact joint over all 9 assignments
    std::vector<std::vector<Rational>> all = oracle::assignments(problem.supports);
    std::vector<double> logp;
    for (const auto& gammas : all) {
        Score s;
        s.gammas = gammas;
        logp.push_back(score_log_joint(s, onsets, problem.params, problem.prior));
    }
    const double z = logsumexp(logp);

    Score init;
    init.gammas = {Rational(1), Rational(1)};
    SweepState state = make_sweep_state(problem, init);
    Rng rng(2026);
    std::map<std::vector<Rational>, int> visits;
    const int kBurn = 200, kSweeps = 20000;
    for (int sweep = 0; sweep < kBurn + kSweeps; ++sweep) {
        gibbs_sweep(problem, state, 1, 1.0, rng);
        if (sweep >= kBurn) ++visits[state.score.gammas];
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        const double p = std::exp(logp[i] - z);
        if (p < 0.01) continue; // skip cells with too few expected visits
        const double freq = static_cast<double>(visits[all[i]]) / kSweeps;
        // Monte Carlo tolerance: ~4 sigma of a binomial proportion plus
        // autocorrelation slack
        const double tol = 5.0 * std::sqrt(p * (1 - p) / kSweeps) + 0.01;
        CHECK(std::abs(freq - p) < tol);
    }
}

TEST_CASE("argmax sweeps are monotone and reach a fixed point") {
    const McmcProblem problem = demo_problem();
    Score init;
    init.gammas = {Rational(0), Rational(0), Rational(0), Rational(0)};
    SweepState state = make_sweep_state(problem, init);
    Rng rng(5);
    double previous = state.log_posterior;
    const double inf = std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep < 50; ++sweep) {
        const bool changed = gibbs_sweep(problem, state, 1, inf, rng);
        CHECK(state.log_posterior >= previous - 1e-9);
        previous = state.log_posterior;
        if (!changed) break;
    }
    // one more sweep after convergence changes nothing
    const Score settled = state.score;
    gibbs_sweep(problem, state, 1, inf, rng);
    CHECK(state.score.gammas == settled.gammas);
}

TEST_CASE("iterative improvement from the exact map is a fixed point") {
    const McmcProblem problem = demo_problem();
    // enumerate the exact MAP
    double best = -std::numeric_limits<double>::infinity();
    Score map;
    for (const auto& gammas : oracle::assignments(problem.supports)) {
        Score s;
        s.gammas = gammas;
        const double mass =
            score_log_joint(s, problem.onsets, problem.params, problem.prior);
        if (mass > best) {
            best = mass;
            map = s;
        }
    }
    const RunResult result = run_ii(problem, 1, 1, ReinitMode::greedy_filter, map, 3);
    CHECK(result.best.gammas == map.gammas);
    CHECK(result.best_log_posterior == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("annealing returns the best visited, never below the start") {
    const McmcProblem problem = demo_problem();
    Score init;
    init.gammas = {Rational(1), Rational(1), Rational(1), Rational(1)};
    const double init_mass =
        score_log_joint(init, problem.onsets, problem.params, problem.prior);
    const RunResult result =
        run_sa(problem, default_sa_schedule(30), 1, init, 99);
    CHECK(result.best_log_posterior >= init_mass - 1e-9);
    REQUIRE(result.trace.size() == 30);
    double best_seen = -std::numeric_limits<double>::infinity();
    for (const auto& row : result.trace) {
        best_seen = std::max(best_seen, row.log_posterior);
        CHECK(row.best_so_far >= row.log_posterior - 1e-12);
    }
    CHECK(result.best_log_posterior >= best_seen - 1e-9);
}

TEST_CASE("default schedule ramps 0.1 to 10 then locks to argmax") {
    const std::vector<double> schedule = default_sa_schedule(50);
    REQUIRE(schedule.size() == 50);
    CHECK(schedule[0] == doctest::Approx(0.1));
    CHECK(schedule[32] == doctest::Approx(10.0));
    for (int i = 33; i < 50; ++i) CHECK(std::isinf(schedule[i]));
    for (int i = 1; i <= 32; ++i) CHECK(schedule[i] > schedule[i - 1]);
    // scaled budgets keep the shape
    const std::vector<double> short_schedule = default_sa_schedule(10);
    REQUIRE(short_schedule.size() == 10);
    CHECK(short_schedule[0] == doctest::Approx(0.1));
    CHECK(std::isinf(short_schedule.back()));
}

TEST_CASE("greedy filter initialization stays in-support and scores sanely") {
    const McmcProblem problem = demo_problem();
    const Score greedy = greedy_filter_init(problem);
    REQUIRE(greedy.intervals() == 4);
    for (int k = 0; k < 4; ++k)
        CHECK(std::find(problem.supports[k].begin(), problem.supports[k].end(),
                        greedy.gammas[k]) != problem.supports[k].end());
    // running ii from it only improves
    const RunResult result = run_ii(problem, 1, 1, ReinitMode::greedy_filter,
                                    std::nullopt, 0);
    CHECK(result.best_log_posterior >=
          score_log_joint(greedy, problem.onsets, problem.params, problem.prior) -
              1e-9);
}

TEST_CASE("restarts explore but never lose the best") {
    const McmcProblem problem = demo_problem();
    const RunResult one = run_ii(problem, 1, 1, ReinitMode::sample_proposal,
                                 std::nullopt, 31);
    const RunResult five = run_ii(problem, 5, 1, ReinitMode::sample_proposal,
                                  std::nullopt, 31);
    CHECK(five.best_log_posterior >= one.best_log_posterior - 1e-9);
}

TEST_CASE("block width two changes the scan but keeps correctness") {
    const McmcProblem problem = demo_problem();
    Score init;
    init.gammas = {Rational(0), Rational(0), Rational(0), Rational(0)};
    SweepState state = make_sweep_state(problem, init);
    Rng rng(8);
    const double inf = std::numeric_limits<double>::infinity();
    double previous = state.log_posterior;
    for (int sweep = 0; sweep < 30; ++sweep) {
        const bool changed = gibbs_sweep(problem, state, 2, inf, rng);
        CHECK(state.log_posterior >= previous - 1e-9);
        previous = state.log_posterior;
        if (!changed) break;
    }
    CHECK(state.log_posterior ==
          doctest::Approx(score_log_joint(state.score, problem.onsets, problem.params,
                                          problem.prior))
              .epsilon(1e-9));
}
