#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tatum/errors.hpp"
#include "tatum/io.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::optional<long long> seed;
    std::optional<std::string> method;
    std::optional<int> particles;
    std::optional<int> sweeps;
    std::optional<int> restarts;
    std::optional<int> block;
    std::string out_path;
    bool use_stdin = false;
};

void add_common_flags(CLI::App* cmd, CliOverrides& cli) {
    cmd->add_option("--config", cli.config_path, "configuration file (key = value lines)");
    cmd->add_option("--seed", cli.seed, "random seed");
    cmd->add_option("--method", cli.method, "pf gf hybrid gibbs sa ii exact");
    cmd->add_option("--particles", cli.particles, "particle count (pf/gf/hybrid)");
    cmd->add_option("--sweeps", cli.sweeps, "sweep count (gibbs/sa)");
    cmd->add_option("--restarts", cli.restarts, "restart count (ii)");
    cmd->add_option("--block", cli.block, "proposal block width");
    cmd->add_option("--out", cli.out_path, "output file (default stdout)");
    cmd->add_flag("--stdin", cli.use_stdin, "read the input stream from stdin");
}

tatum::RunConfig load_config(const CliOverrides& cli) {
    tatum::RunConfig config;
    if (!cli.config_path.empty()) {
        std::ifstream in(cli.config_path);
        if (!in) throw tatum::ConfigError("cannot open config file: " + cli.config_path);
        config = tatum::read_config(in);
    }
    if (cli.seed) config.seed = static_cast<std::uint64_t>(*cli.seed);
    if (cli.method) config.method = *cli.method;
    if (cli.particles) config.particles = *cli.particles;
    if (cli.sweeps) config.sweeps = *cli.sweeps;
    if (cli.restarts) config.restarts = *cli.restarts;
    if (cli.block) config.block = *cli.block;
    return config;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw tatum::FormatError("cannot open input file: " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw tatum::ConfigError("cannot open output file: " + path);
    return out;
}

int exit_code_for(const tatum::Error& e) {
    if (dynamic_cast<const tatum::FormatError*>(&e)) return 2;
    if (dynamic_cast<const tatum::OffGridError*>(&e)) return 2;
    if (dynamic_cast<const tatum::InfeasibleError*>(&e)) return 3;
    if (dynamic_cast<const tatum::ConfigError*>(&e)) return 4;
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tempo tracking and rhythm transcription for onset sequences"};
    app.require_subcommand(1);

    CliOverrides cli;
    std::string input_path, score_path, trajectory_path;
    std::vector<std::string> fit_onsets, fit_scores;

    CLI::App* track = app.add_subcommand("track", "online filtering, one CSV row per event");
    add_common_flags(track, cli);
    track->add_option("input", input_path, "onset file");

    CLI::App* transcribe = app.add_subcommand("transcribe", "full-sequence score estimation");
    add_common_flags(transcribe, cli);
    transcribe->add_option("input", input_path, "onset file");
    transcribe->add_option("--trajectory", trajectory_path, "smoothed trajectory CSV file");

    CLI::App* simulate = app.add_subcommand("simulate", "draw synthetic onsets for a score");
    add_common_flags(simulate, cli);
    simulate->add_option("input", input_path, "score file");

    CLI::App* benchmark = app.add_subcommand("benchmark", "method comparison on generated problems");
    add_common_flags(benchmark, cli);

    CLI::App* fit = app.add_subcommand("fit", "estimate model parameters from aligned pairs");
    add_common_flags(fit, cli);
    fit->add_option("--onsets", fit_onsets, "onset files, aligned with --scores")->required();
    fit->add_option("--scores", fit_scores, "score files, aligned with --onsets")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const tatum::RunConfig config = load_config(cli);
        const bool to_file = !cli.out_path.empty();
        std::ofstream out_file;
        if (to_file) out_file = open_output(cli.out_path);
        std::ostream& out = to_file ? static_cast<std::ostream&>(out_file) : std::cout;

        auto with_input = [&](auto&& body) {
            if (cli.use_stdin) {
                body(std::cin);
            } else {
                if (input_path.empty())
                    throw tatum::ConfigError("need an input file or --stdin");
                std::ifstream in = open_input(input_path);
                body(in);
            }
        };

        if (track->parsed()) {
            with_input([&](std::istream& in) { tatum::cmd_track(config, in, out); });
        } else if (transcribe->parsed()) {
            std::ofstream traj_file;
            std::ostream* traj = nullptr;
            if (!trajectory_path.empty()) {
                traj_file = open_output(trajectory_path);
                traj = &traj_file;
            }
            with_input([&](std::istream& in) {
                tatum::cmd_transcribe(config, in, out, traj, std::cerr);
            });
        } else if (simulate->parsed()) {
            with_input([&](std::istream& in) { tatum::cmd_simulate(config, in, out); });
        } else if (benchmark->parsed()) {
            tatum::cmd_benchmark(config, out, to_file ? std::cout : std::cerr);
        } else if (fit->parsed()) {
            if (fit_onsets.size() != fit_scores.size())
                throw tatum::ConfigError("--onsets and --scores need equal counts");
            std::vector<std::pair<tatum::OnsetSequence, tatum::Score>> pairs;
            for (std::size_t i = 0; i < fit_onsets.size(); ++i) {
                std::ifstream onsets_in = open_input(fit_onsets[i]);
                std::ifstream score_in = open_input(fit_scores[i]);
                pairs.emplace_back(tatum::read_onsets(onsets_in),
                                   tatum::read_score(score_in));
            }
            tatum::cmd_fit(config, pairs, out, std::cerr);
        }
        return 0;
    } catch (const tatum::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
