#include "tatum/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace tatum {

namespace {
constexpr double kTwoPi = 6.283185307179586477;
}

int edit_distance(const Score& reference, const Score& candidate, bool exclude_zero) {
    std::vector<Rational> a = reference.gammas;
    std::vector<Rational> b = candidate.gammas;
    if (exclude_zero) {
        std::vector<Rational> fa, fb;
        for (size_t k = 0; k < a.size(); ++k) {
            if (a[k] == Rational(0)) continue;
            fa.push_back(a[k]);
            if (k < b.size()) fb.push_back(b[k]);
        }
        for (size_t k = a.size(); k < b.size(); ++k) fb.push_back(b[k]);
        a = std::move(fa);
        b = std::move(fb);
    }
    const size_t n = a.size(), m = b.size();
    std::vector<int> prev(m + 1), cur(m + 1);
    std::iota(prev.begin(), prev.end(), 0);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= m; ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

ClaveProblem gen_clave(int n_onsets, double base_tempo, const Modulation& modulation,
                       double obs_var, std::uint64_t seed) {
    if (n_onsets < 2) throw DimensionError("need at least two onsets");
    if (!(base_tempo > 0) || !(obs_var >= 0))
        throw DimensionError("base tempo must be > 0 and observation variance >= 0");
    static const Rational kPattern[] = {Rational(3, 4), Rational(3, 4), Rational(1),
                                        Rational(1, 2), Rational(1)};
    ClaveProblem problem;
    problem.truth.c0 = Rational(0);
    for (int k = 0; k < n_onsets - 1; ++k)
        problem.truth.gammas.push_back(kPattern[k % 5]);

    auto omega_at = [&](const Rational& c) {
        if (modulation.kind == Modulation::Kind::none) return 0.0;
        return modulation.amplitude *
               std::sin(kTwoPi * c.value() / modulation.period_beats);
    };

    Rng rng(seed);
    Rational c = problem.truth.c0;
    double tau = 0.0;
    double period = base_tempo * std::exp2(omega_at(c));
    for (int k = 0; k < n_onsets; ++k) {
        if (k > 0) {
            tau += problem.truth.gammas[k - 1].value() * period;
            c = c + problem.truth.gammas[k - 1];
            period = base_tempo * std::exp2(omega_at(c));
        }
        problem.omega.push_back(omega_at(c));
        problem.tau.push_back(tau);
        problem.onsets.times.push_back(tau + rng.normal(0.0, obs_var));
    }
    return problem;
}

std::string method_label(const MethodSpec& spec) {
    if (!spec.name.empty()) return spec.name;
    switch (spec.kind) {
        case MethodSpec::Kind::pf:
            return "pf-n" + std::to_string(spec.particles) +
                   (spec.refine ? "+ii" : "");
        case MethodSpec::Kind::gf:
            return "gf-n" + std::to_string(spec.particles) +
                   (spec.refine ? "+ii" : "");
        case MethodSpec::Kind::hybrid:
            return "hybrid-n" + std::to_string(spec.particles) +
                   (spec.refine ? "+ii" : "");
        case MethodSpec::Kind::gibbs:
            return "gibbs-s" + std::to_string(spec.sweeps) + "-L" +
                   std::to_string(spec.block);
        case MethodSpec::Kind::sa:
            return "sa-s" + std::to_string(spec.sweeps) + "-L" +
                   std::to_string(spec.block);
        case MethodSpec::Kind::ii:
            return "ii-r" + std::to_string(spec.restarts) + "-L" +
                   std::to_string(spec.block);
        case MethodSpec::Kind::exact:
            return "exact";
    }
    return "unknown";
}

namespace {

Score run_smc_method(const MethodSpec& spec, const OnsetSequence& onsets,
                     const TempoParams& params, const ScorePrior& prior,
                     const std::vector<Rational>& grid, std::uint64_t seed,
                     const Rational& c0) {
    RbpfOptions options;
    options.c0 = c0;
    options.n_particles = spec.particles;
    options.selection = spec.kind == MethodSpec::Kind::pf ? Selection::multinomial
                        : spec.kind == MethodSpec::Kind::gf ? Selection::greedy
                                                            : Selection::hybrid;
    Rbpf filter(params, prior, grid, options, seed);
    filter.init(onsets.times[0], onsets.kind(0));
    for (int k = 1; k < onsets.size(); ++k)
        filter.step(onsets.times[k], onsets.kind(k));
    Score map = filter.map_score();
    if (!spec.refine || map.intervals() == 0) return map;
    return refine_reduced(map, filter.supports(), onsets, params, prior,
                          RefineMode::ii, {}, mix_seed(seed, "refine"));
}

Score run_exact(const OnsetSequence& onsets, const TempoParams& params,
                const ScorePrior& prior, const std::vector<Rational>& grid,
                const Rational& c0) {
    const int K = onsets.size() - 1;
    std::vector<Rational> sorted = grid;
    std::sort(sorted.begin(), sorted.end());
    if (K * std::log(static_cast<double>(sorted.size())) > std::log(2e6))
        throw DimensionError("exact enumeration too large for this problem");
    Score current, best;
    current.c0 = c0;
    best.c0 = c0;
    current.gammas.assign(K, sorted[0]);
    double best_mass = -std::numeric_limits<double>::infinity();
    std::vector<size_t> digits(K, 0);
    while (true) {
        double mass;
        try {
            mass = score_log_joint(current, onsets, params, prior);
        } catch (const OffGridError&) {
            mass = -std::numeric_limits<double>::infinity();
        }
        if (mass > best_mass) {
            best_mass = mass;
            best = current;
        }
        int pos = K - 1;
        while (pos >= 0 && digits[pos] + 1 == sorted.size()) {
            digits[pos] = 0;
            current.gammas[pos] = sorted[0];
            --pos;
        }
        if (pos < 0) break;
        ++digits[pos];
        current.gammas[pos] = sorted[digits[pos]];
    }
    if (!std::isfinite(best_mass))
        throw InfeasibleError("no grid assignment has positive mass");
    return best;
}

} // namespace

Score run_method(const MethodSpec& spec, const OnsetSequence& onsets,
                 const TempoParams& params, const ScorePrior& prior,
                 const std::vector<Rational>& grid, std::uint64_t seed,
                 const Rational& c0) {
    if (onsets.size() < 1) throw DimensionError("empty onset sequence");
    const int K = onsets.size() - 1;
    switch (spec.kind) {
        case MethodSpec::Kind::pf:
        case MethodSpec::Kind::gf:
        case MethodSpec::Kind::hybrid:
            return run_smc_method(spec, onsets, params, prior, grid, seed, c0);
        case MethodSpec::Kind::exact:
            return run_exact(onsets, params, prior, grid, c0);
        default:
            break;
    }
    McmcProblem problem{onsets, params, prior, uniform_supports(grid, K), c0};
    if (spec.kind == MethodSpec::Kind::ii)
        return run_ii(problem, spec.restarts, spec.block, ReinitMode::sample_proposal,
                      std::nullopt, seed)
            .best;
    std::vector<double> schedule;
    if (spec.kind == MethodSpec::Kind::sa) {
        schedule = default_sa_schedule(spec.sweeps);
    } else {
        schedule.assign(spec.sweeps, 1.0); // plain sampling, best visited kept
    }
    return run_sa(problem, schedule, spec.block, std::nullopt, seed).best;
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
    if (config.methods.empty()) throw DimensionError("no methods to benchmark");
    if (config.trials < 1) throw DimensionError("need at least one trial");
    BenchmarkReport report;
    report.methods.resize(config.methods.size());

    std::vector<ClaveProblem> problems;
    problems.reserve(config.trials);
    for (int t = 0; t < config.trials; ++t)
        problems.push_back(gen_clave(config.n_onsets, config.base_tempo,
                                     config.modulation, config.obs_var,
                                     mix_seed(config.seed, 1000 + t)));

    for (size_t m = 0; m < config.methods.size(); ++m) {
        const MethodSpec& spec = config.methods[m];
        MethodReport& out = report.methods[m];
        out.name = method_label(spec);
        out.trials = config.trials;
        const std::uint64_t method_seed = mix_seed(config.seed, out.name.c_str());

        reset_potential_op_count();
        const auto t0 = std::chrono::steady_clock::now();
        for (int t = 0; t < config.trials; ++t) {
            const ClaveProblem& problem = problems[t];
            try {
                Score estimate =
                    run_method(spec, problem.onsets, config.params, config.prior,
                               config.grid, mix_seed(method_seed, t));
                out.edits.push_back(
                    edit_distance(problem.truth, estimate, config.exclude_zero));
                const double lld =
                    score_log_joint(estimate, problem.onsets, config.params,
                                    config.prior) -
                    score_log_joint(problem.truth, problem.onsets, config.params,
                                    config.prior);
                out.llds.push_back(lld);
            } catch (const Error&) {
                ++out.errors;
            }
        }
        const auto t1 = std::chrono::steady_clock::now();
        out.potential_ops = potential_op_count();
        out.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

        std::vector<double> ed(out.edits.begin(), out.edits.end());
        if (!ed.empty()) {
            out.edit_median = quantile(ed, 0.5);
            out.edit_q25 = quantile(ed, 0.25);
            out.edit_q75 = quantile(ed, 0.75);
            out.lld_median = quantile(out.llds, 0.5);
            out.lld_q25 = quantile(out.llds, 0.25);
            out.lld_q75 = quantile(out.llds, 0.75);
        }
    }
    return report;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DimensionError("quantile of nothing");
    if (q < 0 || q > 1) throw DimensionError("quantile level outside [0,1]");
    std::sort(values.begin(), values.end());
    const double pos = q * (values.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace

std::string format_report(const BenchmarkReport& report) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"method", "trials", "errors", "edit med [q25,q75]",
                    "lld med [q25,q75]", "pot ops", "wall ms"});
    for (const MethodReport& m : report.methods) {
        rows.push_back({m.name, std::to_string(m.trials), std::to_string(m.errors),
                        fixed(m.edit_median, 1) + " [" + fixed(m.edit_q25, 1) + "," +
                            fixed(m.edit_q75, 1) + "]",
                        fixed(m.lld_median, 3) + " [" + fixed(m.lld_q25, 3) + "," +
                            fixed(m.lld_q75, 3) + "]",
                        std::to_string(m.potential_ops), fixed(m.wall_ms, 1)});
    }
    std::vector<size_t> widths(rows[0].size(), 0);
    for (const auto& row : rows)
        for (size_t c = 0; c < row.size(); ++c)
            widths[c] = std::max(widths[c], row[c].size());
    std::string out;
    for (const auto& row : rows) {
        for (size_t c = 0; c < row.size(); ++c) {
            out += row[c];
            if (c + 1 < row.size())
                out += std::string(widths[c] - row[c].size() + 2, ' ');
        }
        out += '\n';
    }
    return out;
}

std::string report_csv(const BenchmarkReport& report) {
    std::string out =
        "method,trials,errors,edit_median,edit_q25,edit_q75,"
        "lld_median,lld_q25,lld_q75,potential_ops,wall_ms\n";
    for (const MethodReport& m : report.methods) {
        out += m.name + "," + std::to_string(m.trials) + "," +
               std::to_string(m.errors) + "," + fixed(m.edit_median, 9) + "," +
               fixed(m.edit_q25, 9) + "," + fixed(m.edit_q75, 9) + "," +
               fixed(m.lld_median, 9) + "," + fixed(m.lld_q25, 9) + "," +
               fixed(m.lld_q75, 9) + "," + std::to_string(m.potential_ops) + "," +
               fixed(m.wall_ms, 9) + "\n";
    }
    return out;
}

std::vector<MethodSpec> default_method_matrix() {
    std::vector<MethodSpec> methods;
    for (int sweeps : {10, 50})
        for (int block : {1, 2}) {
            methods.push_back({MethodSpec::Kind::gibbs, "", 0, sweeps, 1, block, false});
            methods.push_back({MethodSpec::Kind::sa, "", 0, sweeps, 1, block, false});
        }
    for (int block : {1, 2})
        methods.push_back({MethodSpec::Kind::ii, "", 0, 0, 5, block, false});
    methods.push_back({MethodSpec::Kind::gf, "", 10, 0, 0, 1, true});
    for (int n : {5, 10, 50, 100})
        methods.push_back({MethodSpec::Kind::pf, "", n, 0, 0, 1, true});
    return methods;
}

} // namespace tatum
