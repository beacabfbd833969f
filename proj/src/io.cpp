#include "tatum/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "tatum/errors.hpp"
#include "tatum/lds.hpp"
#include "tatum/smc.hpp"

namespace tatum {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char delim) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream stream(s);
    while (std::getline(stream, item, delim)) parts.push_back(trim(item));
    if (!s.empty() && s.back() == delim) parts.push_back("");
    return parts;
}

double parse_double(const std::string& s) {
    const std::string t = trim(s);
    if (t.empty()) throw FormatError("empty number");
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw FormatError("bad number: '" + t + "'");
    return v;
}

long long parse_int(const std::string& s) {
    const std::string t = trim(s);
    if (t.empty()) throw FormatError("empty integer");
    char* end = nullptr;
    long long v = std::strtoll(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size()) throw FormatError("bad integer: '" + t + "'");
    return v;
}

bool parse_bool(const std::string& s) {
    const std::string t = trim(s);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw FormatError("bad boolean: '" + t + "'");
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> values;
    for (const auto& part : split(s, ',')) values.push_back(parse_double(part));
    return values;
}

std::string fmt9(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", x);
    return buf;
}

std::string fmtg(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

void write_trajectory_row(std::ostream& out, int k, double y, double tau_mean,
                          double period_mean, double tau_var, double period_var,
                          const std::string& gamma, const std::string& c) {
    out << k << ',' << fmt9(y) << ',' << fmt9(tau_mean) << ','
        << fmt9(period_mean) << ',' << fmt9(std::log2(period_mean)) << ','
        << fmt9(tau_var) << ',' << fmt9(period_var) << ',' << gamma << ',' << c
        << '\n';
}

constexpr const char* kTrajectoryHeader =
    "k,y,tau_mean,delta_mean,omega_mean,tau_var,delta_var,gamma_map,c_map";

} // namespace

OnsetSequence read_onsets(std::istream& in) {
    std::string line;
    bool header_seen = false;
    OnsetSequence onsets;
    bool any_non_onset = false;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != "#onsets v1") throw FormatError("expected '#onsets v1' header");
            header_seen = true;
            continue;
        }
        if (line[0] == '#') continue;
        std::istringstream row(line);
        std::string time_tok, kind_tok, extra;
        row >> time_tok;
        bool has_kind = static_cast<bool>(row >> kind_tok);
        if (row >> extra) throw FormatError("trailing tokens on onset line: '" + line + "'");
        onsets.times.push_back(parse_double(time_tok));
        EventKind kind = EventKind::onset;
        if (has_kind) {
            if (kind_tok == "1") kind = EventKind::onset;
            else if (kind_tok == "0") kind = EventKind::offset;
            else throw FormatError("event flag must be 1 or 0, got '" + kind_tok + "'");
        }
        if (kind != EventKind::onset) any_non_onset = true;
        onsets.kinds.push_back(kind);
    }
    if (!header_seen) throw FormatError("expected '#onsets v1' header");
    if (!any_non_onset) onsets.kinds.clear();
    return onsets;
}

void write_onsets(std::ostream& out, const OnsetSequence& onsets) {
    out << "#onsets v1\n";
    for (int k = 0; k < onsets.size(); ++k) {
        out << fmt9(onsets.times[k]);
        if (!onsets.kinds.empty()) {
            if (onsets.kinds[k] == EventKind::outlier)
                throw FormatError("outlier events have no file representation");
            out << ' ' << (onsets.kinds[k] == EventKind::onset ? 1 : 0);
        }
        out << '\n';
    }
}

Score read_score(std::istream& in) {
    std::string line;
    bool header_seen = false;
    Score score;
    bool first_row = true;
    Rational prev;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != "#score v1") throw FormatError("expected '#score v1' header");
            header_seen = true;
            continue;
        }
        if (line[0] == '#') continue;
        std::istringstream row(line);
        std::string c_tok, g_tok, extra;
        if (!(row >> c_tok >> g_tok)) throw FormatError("score line needs two columns: '" + line + "'");
        if (row >> extra) throw FormatError("trailing tokens on score line: '" + line + "'");
        Rational c = parse_rational(c_tok);
        if (first_row) {
            if (g_tok != "-") throw FormatError("first score line must have interval '-'");
            score.c0 = c;
            prev = c;
            first_row = false;
            continue;
        }
        Rational gamma = parse_rational(g_tok);
        if (!(prev + gamma == c))
            throw FormatError("score locations do not telescope at '" + line + "'");
        score.gammas.push_back(gamma);
        prev = c;
    }
    if (!header_seen) throw FormatError("expected '#score v1' header");
    if (first_row) throw FormatError("score file has no onset lines");
    return score;
}

void write_score(std::ostream& out, const Score& score) {
    out << "#score v1\n";
    const std::vector<Rational> locs = score.locations();
    out << locs[0].str() << " -\n";
    for (int k = 1; k < static_cast<int>(locs.size()); ++k)
        out << locs[k].str() << ' ' << score.gammas[k - 1].str() << '\n';
}

void apply_config(RunConfig& config, const std::string& key, const std::string& value) {
    try {
        if (key == "dim") config.dim = static_cast<int>(parse_int(value));
        else if (key == "a_coeffs") config.a_coeffs = parse_double_list(value);
        else if (key == "q_tau") config.q_tau = parse_double(value);
        else if (key == "q_delta") config.q_delta = parse_double_list(value);
        else if (key == "r") config.r = parse_double(value);
        else if (key == "r_off") config.r_off = parse_double(value);
        else if (key == "r_outlier") config.r_outlier = parse_double(value);
        else if (key == "prior_delta_mean") config.prior_delta_mean = parse_double(value);
        else if (key == "prior_delta_var") config.prior_delta_var = parse_double(value);
        else if (key == "prior_tau_var") config.prior_tau_var = parse_double(value);
        else if (key == "prior_mode") config.prior_mode = trim(value);
        else if (key == "lambda") config.lambda = parse_double(value);
        else if (key == "schemas") {
            config.schemas.clear();
            for (const auto& schema : split(value, ';')) {
                std::vector<int> divisors;
                for (const auto& d : split(schema, ','))
                    divisors.push_back(static_cast<int>(parse_int(d)));
                config.schemas.push_back(std::move(divisors));
            }
        } else if (key == "schema_probs") {
            config.schema_probs = parse_double_list(value);
        } else if (key == "table") {
            config.table.clear();
            for (const auto& entry : split(value, ',')) {
                std::size_t colon = entry.find(':');
                if (colon == std::string::npos)
                    throw FormatError("table entry needs 'fraction:prob'");
                config.table.emplace_back(parse_rational(trim(entry.substr(0, colon))),
                                          parse_double(entry.substr(colon + 1)));
            }
        } else if (key == "table_floor") config.table_floor = parse_double(value);
        else if (key == "gamma_grid") {
            config.gamma_grid.clear();
            for (const auto& g : split(value, ','))
                config.gamma_grid.push_back(parse_rational(g));
        } else if (key == "c0") config.c0 = parse_rational(trim(value));
        else if (key == "method") config.method = trim(value);
        else if (key == "particles") config.particles = static_cast<int>(parse_int(value));
        else if (key == "sweeps") config.sweeps = static_cast<int>(parse_int(value));
        else if (key == "restarts") config.restarts = static_cast<int>(parse_int(value));
        else if (key == "block") config.block = static_cast<int>(parse_int(value));
        else if (key == "refine") config.refine = parse_bool(value);
        else if (key == "prune_threshold") config.prune_threshold = parse_double(value);
        else if (key == "seed") config.seed = static_cast<std::uint64_t>(parse_int(value));
        else if (key == "noise_mode") config.noise_mode = trim(value);
        else if (key == "forced_delta") config.forced_delta = parse_double_list(value);
        else if (key == "trials") config.trials = static_cast<int>(parse_int(value));
        else if (key == "n_onsets") config.n_onsets = static_cast<int>(parse_int(value));
        else if (key == "base_tempo") config.base_tempo = parse_double(value);
        else if (key == "mod_amplitude") config.mod_amplitude = parse_double(value);
        else if (key == "mod_period") config.mod_period = parse_double(value);
        else if (key == "obs_var") config.obs_var = parse_double(value);
        else if (key == "matrix") config.matrix = trim(value);
        else if (key == "exclude_zero") config.exclude_zero = parse_bool(value);
        else throw ConfigError("unknown config key: '" + key + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("bad value for '" + key + "': " + e.what());
    }
}

RunConfig read_config(std::istream& in) {
    RunConfig config;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value', got '" + line + "'");
        apply_config(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

TempoParams config_params(const RunConfig& config) {
    TempoParams params;
    params.dim = config.dim;
    if (config.dim >= 3) {
        const int b = config.dim - 2;
        if (static_cast<int>(config.a_coeffs.size()) != b * b)
            throw ConfigError("a_coeffs needs (dim-2)^2 entries");
        params.a_coeffs = Eigen::MatrixXd(b, b);
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < b; ++j)
                params.a_coeffs(i, j) = config.a_coeffs[i * b + j];
    } else {
        params.a_coeffs = Eigen::MatrixXd();
    }
    if (static_cast<int>(config.q_delta.size()) < config.dim - 1)
        throw ConfigError("q_delta needs at least dim-1 entries");
    params.q_delta.assign(config.q_delta.begin(), config.q_delta.begin() + (config.dim - 1));
    params.q_tau = config.q_tau;
    params.r = config.r;
    params.r_off = config.r_off;
    params.r_outlier = config.r_outlier;
    params.prior_delta_mean = config.prior_delta_mean;
    params.prior_delta_var = config.prior_delta_var;
    params.prior_tau_var = config.prior_tau_var;
    try {
        validate(params);
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid model parameters: ") + e.what());
    }
    return params;
}

std::vector<Rational> config_grid(const RunConfig& config) {
    return config.gamma_grid.empty() ? default_gamma_grid() : config.gamma_grid;
}

ScorePrior config_prior(const RunConfig& config) {
    const std::vector<Rational> grid = config_grid(config);
    try {
        if (config.prior_mode == "depth") {
            if (config.schemas.size() != config.schema_probs.size())
                throw ConfigError("schemas and schema_probs must have equal length");
            std::vector<SubdivisionSchema> schemas;
            for (const auto& divisors : config.schemas)
                schemas.push_back(SubdivisionSchema{divisors, config.lambda});
            return make_depth_prior(std::move(schemas), config.schema_probs, grid);
        }
        if (config.prior_mode == "table") {
            std::map<Rational, double> table;
            if (config.table.empty()) {
                table[Rational(0)] = 0.80;
                table[Rational(1, 3)] = 0.0082;
                table[Rational(1, 2)] = 0.15;
                table[Rational(5, 6)] = 0.0418;
            } else {
                for (const auto& [c, p] : config.table) table[c] = p;
            }
            return make_table_prior(table, grid, config.table_floor);
        }
        throw ConfigError("prior_mode must be 'depth' or 'table'");
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid score prior: ") + e.what());
    }
}

MethodSpec config_method(const RunConfig& config) {
    MethodSpec spec;
    if (config.method == "pf") spec.kind = MethodSpec::Kind::pf;
    else if (config.method == "gf") spec.kind = MethodSpec::Kind::gf;
    else if (config.method == "hybrid") spec.kind = MethodSpec::Kind::hybrid;
    else if (config.method == "gibbs") spec.kind = MethodSpec::Kind::gibbs;
    else if (config.method == "sa") spec.kind = MethodSpec::Kind::sa;
    else if (config.method == "ii") spec.kind = MethodSpec::Kind::ii;
    else if (config.method == "exact") spec.kind = MethodSpec::Kind::exact;
    else throw ConfigError("unknown method: '" + config.method + "'");
    spec.particles = config.particles;
    spec.sweeps = config.sweeps;
    spec.restarts = config.restarts;
    spec.block = config.block;
    spec.refine = config.refine;
    return spec;
}

std::string serialize_params(const TempoParams& params) {
    std::ostringstream out;
    out << "dim = " << params.dim << '\n';
    if (params.dim >= 3) {
        out << "a_coeffs = ";
        const int b = params.dim - 2;
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < b; ++j)
                out << (i + j ? "," : "") << fmtg(params.a_coeffs(i, j));
        out << '\n';
    }
    out << "q_tau = " << fmtg(params.q_tau) << '\n';
    out << "q_delta = ";
    for (std::size_t i = 0; i < params.q_delta.size(); ++i)
        out << (i ? "," : "") << fmtg(params.q_delta[i]);
    out << '\n';
    out << "r = " << fmtg(params.r) << '\n';
    out << "r_off = " << fmtg(params.r_off) << '\n';
    out << "r_outlier = " << fmtg(params.r_outlier) << '\n';
    out << "prior_delta_mean = " << fmtg(params.prior_delta_mean) << '\n';
    out << "prior_delta_var = " << fmtg(params.prior_delta_var) << '\n';
    out << "prior_tau_var = " << fmtg(params.prior_tau_var) << '\n';
    return out.str();
}

void cmd_track(const RunConfig& config, std::istream& onsets_in, std::ostream& out) {
    const MethodSpec spec = config_method(config);
    Selection selection;
    switch (spec.kind) {
        case MethodSpec::Kind::pf: selection = Selection::multinomial; break;
        case MethodSpec::Kind::gf: selection = Selection::greedy; break;
        case MethodSpec::Kind::hybrid: selection = Selection::hybrid; break;
        default: throw ConfigError("track supports methods pf, gf, hybrid");
    }
    const OnsetSequence onsets = read_onsets(onsets_in);
    if (onsets.size() == 0) throw InfeasibleError("no events to track");
    RbpfOptions options;
    options.n_particles = config.particles;
    options.selection = selection;
    options.prune_threshold = config.prune_threshold;
    options.c0 = config.c0;
    Rbpf filter(config_params(config), config_prior(config), config_grid(config),
                options, config.seed);
    out << kTrajectoryHeader << '\n';
    for (int k = 0; k < onsets.size(); ++k) {
        if (k == 0) filter.init(onsets.times[k], onsets.kind(k));
        else filter.step(onsets.times[k], onsets.kind(k));
        const FilterEstimate est = filter.estimate();
        const Score map = filter.map_score();
        const std::string gamma = k == 0 ? "-" : map.gammas.back().str();
        write_trajectory_row(out, k, onsets.times[k], est.tau_mean, est.period_mean,
                             est.tau_var, est.period_var, gamma,
                             map.locations().back().str());
        out.flush();
    }
}

void cmd_transcribe(const RunConfig& config, std::istream& onsets_in,
                    std::ostream& score_out, std::ostream* trajectory_out,
                    std::ostream& info) {
    const OnsetSequence onsets = read_onsets(onsets_in);
    if (onsets.size() == 0) throw InfeasibleError("no events to transcribe");
    const TempoParams params = config_params(config);
    const ScorePrior prior = config_prior(config);
    const std::vector<Rational> grid = config_grid(config);
    const MethodSpec spec = config_method(config);
    const Score estimate =
        run_method(spec, onsets, params, prior, grid, config.seed, config.c0);
    write_score(score_out, estimate);
    info << "method = " << method_label(spec) << "  events = " << onsets.size()
         << "  log_joint = " << fmt9(score_log_joint(estimate, onsets, params, prior))
         << '\n';
    if (trajectory_out == nullptr) return;
    const ClampedLds lds = build_lds(params, estimate, onsets);
    MessageSet msgs;
    forward_pass(lds.spec, lds.seq, msgs);
    backward_pass(lds.spec, lds.seq, msgs);
    const Eigen::VectorXd selector = period_selector(params);
    const std::vector<Rational> locs = estimate.locations();
    *trajectory_out << kTrajectoryHeader << '\n';
    for (int k = 0; k < onsets.size(); ++k) {
        const Moments m = to_moments(smooth(msgs, k));
        const double period_mean = selector.dot(m.mean);
        const double period_var = selector.dot(m.cov * selector);
        const std::string gamma = k == 0 ? "-" : estimate.gammas[k - 1].str();
        write_trajectory_row(*trajectory_out, k, onsets.times[k], m.mean(0),
                             period_mean, m.cov(0, 0), period_var, gamma,
                             locs[k].str());
    }
}

void cmd_simulate(const RunConfig& config, std::istream& score_in,
                  std::ostream& onsets_out) {
    const Score score = read_score(score_in);
    const TempoParams params = config_params(config);
    SimulateOptions options;
    if (config.noise_mode == "full") options.mode = NoiseMode::full;
    else if (config.noise_mode == "zeta_tau_zero") options.mode = NoiseMode::zeta_tau_zero;
    else if (config.noise_mode == "noiseless") options.mode = NoiseMode::noiseless;
    else throw ConfigError("noise_mode must be full, zeta_tau_zero, or noiseless");
    if (!config.forced_delta.empty()) {
        if (params.dim != 2)
            throw ConfigError("forced_delta requires dim = 2");
        if (static_cast<int>(config.forced_delta.size()) < score.intervals())
            throw ConfigError("forced_delta needs one value per interval");
        options.forced_delta = config.forced_delta;
    }
    const SimulateResult result = simulate(score, params, options, config.seed);
    write_onsets(onsets_out, result.onsets);
}

void cmd_benchmark(const RunConfig& config, std::ostream& csv_out,
                   std::ostream& table_out) {
    BenchmarkConfig bench;
    if (config.matrix == "default") bench.methods = default_method_matrix();
    else if (config.matrix == "single") bench.methods = {config_method(config)};
    else throw ConfigError("matrix must be 'default' or 'single'");
    bench.trials = config.trials;
    bench.n_onsets = config.n_onsets;
    bench.base_tempo = config.base_tempo;
    bench.modulation.kind = config.mod_amplitude == 0.0 ? Modulation::Kind::none
                                                        : Modulation::Kind::sinusoidal;
    bench.modulation.amplitude = config.mod_amplitude;
    bench.modulation.period_beats = config.mod_period;
    bench.obs_var = config.obs_var;
    bench.params = config_params(config);
    bench.prior = config_prior(config);
    bench.grid = config_grid(config);
    bench.seed = config.seed;
    bench.exclude_zero = config.exclude_zero;
    const BenchmarkReport report = run_benchmark(bench);
    csv_out << report_csv(report);
    table_out << format_report(report);
}

void cmd_fit(const RunConfig& config,
             const std::vector<std::pair<OnsetSequence, Score>>& pairs,
             std::ostream& params_out, std::ostream& info) {
    if (pairs.empty()) throw InfeasibleError("fit needs at least one (onsets, score) pair");
    const TempoParams params0 = config_params(config);
    LdsSpec spec0;
    std::vector<LdsSequence> dataset;
    bool any_plain_r = false;
    for (const auto& [onsets, score] : pairs) {
        if (onsets.size() != score.intervals() + 1)
            throw FormatError("onsets and score lengths disagree");
        ClampedLds lds = build_lds(params0, score, onsets);
        if (dataset.empty()) spec0 = lds.spec;
        // A uniform-R sequence defers to spec.R so the observation noise
        // stays a single fittable scalar.
        if (onsets.kinds.empty()) {
            lds.seq.R_seq.clear();
            any_plain_r = true;
        }
        dataset.push_back(std::move(lds.seq));
    }
    EmOptions options;
    options.fit_R = any_plain_r;
    options.fit_Q_diag = true;
    options.fit_A = params0.dim >= 3 ? EmOptions::FitA::lower_block : EmOptions::FitA::none;
    const EmResult result = em_fit(spec0, std::move(dataset), options);
    TempoParams fitted = params0;
    fitted.q_tau = result.spec.Q(0, 0);
    for (int i = 0; i + 1 < params0.dim; ++i)
        fitted.q_delta[i] = result.spec.Q(i + 1, i + 1);
    if (any_plain_r) fitted.r = result.spec.R(0, 0);
    if (result.lower_block.size() > 0) fitted.a_coeffs = result.lower_block;
    params_out << serialize_params(fitted);
    info << "sequences = " << pairs.size()
         << "  iterations = " << result.loglik_trace.size() << "  loglik = ";
    if (!result.loglik_trace.empty())
        info << fmt9(result.loglik_trace.front()) << " -> "
             << fmt9(result.loglik_trace.back());
    info << '\n';
}

} // namespace tatum
