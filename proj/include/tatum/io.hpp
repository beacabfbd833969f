#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "tatum/eval.hpp"
#include "tatum/score.hpp"
#include "tatum/tempo_model.hpp"

namespace tatum {

/// Onset file: `#onsets v1` header, then one event per line: the time in
/// seconds, optionally followed by 1 (onset) or 0 (offset).  `#` lines and
/// blanks are skipped.  Times print with 9 decimals.
OnsetSequence read_onsets(std::istream& in);
void write_onsets(std::ostream& out, const OnsetSequence& onsets);

/// Score file: `#score v1` header, one line per onset holding the location
/// c_k and the interval gamma_k as exact rationals; the first onset's
/// interval column is `-`.  Locations must telescope over the intervals.
Score read_score(std::istream& in);
void write_score(std::ostream& out, const Score& score);

/// Flat `key = value` configuration.  Every field has a default; an
/// unknown key raises ConfigError.
struct RunConfig {
    // model
    int dim = 3;
    std::vector<double> a_coeffs = {-0.072}; // row-major (D-2)x(D-2)
    double q_tau = 0.008 * 0.008;
    std::vector<double> q_delta = {0.007 * 0.007, 0.050 * 0.050};
    double r = 0.013 * 0.013;
    double r_off = 0.013 * 0.013;
    double r_outlier = 2.0;
    double prior_delta_mean = 0.5;
    double prior_delta_var = 0.2 * 0.2;
    double prior_tau_var = 1e6;
    // score prior
    std::string prior_mode = "depth"; // depth | table
    double lambda = 1.0;
    std::vector<std::vector<int>> schemas = {{2, 2, 2, 2, 2}};
    std::vector<double> schema_probs = {1.0};
    std::vector<std::pair<Rational, double>> table; // fraction -> probability
    double table_floor = 1e-6;
    std::vector<Rational> gamma_grid; // empty = default grid
    Rational c0 = Rational(0);
    // method
    std::string method = "pf"; // pf | gf | hybrid | gibbs | sa | ii | exact
    int particles = 100;
    int sweeps = 50;
    int restarts = 5;
    int block = 1;
    bool refine = true;
    double prune_threshold = 1e-8;
    std::uint64_t seed = 0;
    // simulation
    std::string noise_mode = "full"; // full | zeta_tau_zero | noiseless
    std::vector<double> forced_delta;
    // benchmark
    int trials = 20;
    int n_onsets = 11;
    double base_tempo = 0.5;
    double mod_amplitude = 0.3;
    double mod_period = 32.0;
    double obs_var = 0.025 * 0.025;
    std::string matrix = "default"; // default | single
    bool exclude_zero = false;
};

/// Applies one `key = value` assignment; throws ConfigError on unknown
/// keys or unparsable values.
void apply_config(RunConfig& config, const std::string& key, const std::string& value);

/// Reads a whole config file.
RunConfig read_config(std::istream& in);

TempoParams config_params(const RunConfig& config);
ScorePrior config_prior(const RunConfig& config);
std::vector<Rational> config_grid(const RunConfig& config);
MethodSpec config_method(const RunConfig& config);

/// Model parameters as config text (read_config-compatible).
std::string serialize_params(const TempoParams& params);

/// Online tracking: consumes events in order and emits one CSV row per
/// event as soon as it is absorbed (row k depends only on events 0..k).
/// Columns: k, y_k, tau_mean, delta_mean, omega_mean, tau_var, delta_var,
/// gamma_map, c_map.  Methods: pf, gf, hybrid.
void cmd_track(const RunConfig& config, std::istream& onsets_in, std::ostream& out);

/// Full-sequence transcription with the configured method; writes the
/// estimated score, optionally a smoothed trajectory CSV under that score,
/// and a one-line summary to `info`.
void cmd_transcribe(const RunConfig& config, std::istream& onsets_in,
                    std::ostream& score_out, std::ostream* trajectory_out,
                    std::ostream& info);

/// Draws synthetic onsets for a score.
void cmd_simulate(const RunConfig& config, std::istream& score_in,
                  std::ostream& onsets_out);

/// Method comparison on generated problems; CSV to `csv_out`, aligned
/// table to `table_out`.
void cmd_benchmark(const RunConfig& config, std::ostream& csv_out,
                   std::ostream& table_out);

/// Parameter estimation from (onsets, score) pairs; fitted parameters as
/// config text to `params_out`, the likelihood trace to `info`.
void cmd_fit(const RunConfig& config,
             const std::vector<std::pair<OnsetSequence, Score>>& pairs,
             std::ostream& params_out, std::ostream& info);

} // namespace tatum
