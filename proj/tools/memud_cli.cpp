// memud: Monte Carlo driver for blind multiuser detection experiments.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "memud/config.hpp"
#include "memud/harness.hpp"
#include "memud/stats.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

struct RunOptions {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    std::string detectors;
    std::size_t frames = 0;
    std::size_t workers = 0;
    bool trace = false;
    std::vector<std::string> settings;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("--config", o.config, "INI file applied on top of the defaults");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--out", o.out, "Output CSV path");
    cmd->add_option("--detectors", o.detectors, "Comma list: ma,std-ga,mf,decorrelator,mmse,ml-oracle");
    cmd->add_option("--frames", o.frames, "Monte Carlo frames per point");
    cmd->add_option("--workers", o.workers, "Worker threads");
    cmd->add_flag("--trace", o.trace, "Also write the GA trace of the first frame");
    cmd->add_option("--set", o.settings, "Override a config key: section.key=value");
}

memud::ExperimentConfig build_config(memud::ExperimentKind kind, const RunOptions& o,
                                     const CLI::App* cmd) {
    auto cfg = memud::default_config(kind);
    if (!o.config.empty()) {
        memud::apply_config_file(cfg, o.config);
        // The subcommand decides the experiment, whatever the file says.
        cfg.kind = kind;
    }
    for (const auto& s : o.settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw memud::ConfigError("--set expects section.key=value, got '" + s + "'");
        }
        memud::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (cmd->count("--seed")) {
        cfg.seed = o.seed;
    }
    if (cmd->count("--out")) {
        cfg.output = o.out;
    }
    if (cmd->count("--detectors")) {
        cfg.detectors = memud::parse_name_list(o.detectors);
    }
    if (cmd->count("--frames")) {
        cfg.frames = o.frames;
    }
    if (cmd->count("--workers")) {
        cfg.workers = o.workers;
    }
    if (o.trace) {
        cfg.trace = true;
    }
    cfg.validate();
    return cfg;
}

std::filesystem::path trace_path(const std::filesystem::path& out) {
    auto p = out;
    p.replace_filename(out.stem().string() + "_trace.csv");
    return p;
}

int run(memud::ExperimentKind kind, const RunOptions& o, const CLI::App* cmd) {
    const auto cfg = build_config(kind, o, cmd);
    const auto result = memud::run_experiment(cfg);
    memud::emit_csv(result.table, cfg.output);
    std::printf("%s: %zu rows -> %s\n", memud::kind_name(cfg.kind).c_str(), result.table.size(),
                cfg.output.string().c_str());
    if (cfg.trace) {
        const auto tp = trace_path(cfg.output);
        memud::write_trace_csv(result.trace, tp);
        std::printf("trace: %zu generations -> %s\n", result.trace.size(), tp.string().c_str());
    }
    return 0;
}

// Score matrix CSV: header with algorithm names, one row per problem.
int run_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw memud::IoError("cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw memud::ConfigError(path + ": empty file");
    }
    const auto names = memud::parse_name_list(line);
    std::vector<std::vector<double>> scores(names.size());
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::vector<double> values;
        try {
            values = memud::parse_double_list(line);
        } catch (const memud::ConfigError& e) {
            throw memud::ConfigError(path + ":" + std::to_string(row) + ": " + e.what());
        }
        if (values.size() != names.size()) {
            throw memud::ConfigError(path + ":" + std::to_string(row) + ": expected " +
                                     std::to_string(names.size()) + " values");
        }
        for (std::size_t a = 0; a < names.size(); ++a) {
            scores[a].push_back(values[a]);
        }
    }
    const auto fr = memud::friedman_test(scores);
    std::printf("friedman: chi2=%.6g p=%.6g problems=%zu\n", fr.statistic, fr.p_value,
                scores.front().size());
    for (std::size_t a = 0; a < names.size(); ++a) {
        std::printf("  %-16s avg_rank=%.4f\n", names[a].c_str(), fr.average_ranks[a]);
    }
    for (std::size_t a = 1; a < names.size(); ++a) {
        try {
            const auto w = memud::wilcoxon_signed_rank(scores[0], scores[a]);
            std::printf("wilcoxon %s vs %s: W=%.6g n=%zu p=%.6g%s\n", names[0].c_str(),
                        names[a].c_str(), w.statistic, w.n, w.p_value, w.exact ? " (exact)" : "");
        } catch (const memud::ParameterError& e) {
            std::printf("wilcoxon %s vs %s: skipped (%s)\n", names[0].c_str(), names[a].c_str(),
                        e.what());
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blind joint channel estimation and detection for DS/CDMA"};
    app.require_subcommand(1);

    RunOptions ber_opts, cap_opts, mse_opts, nf_opts;
    auto* ber = app.add_subcommand("ber-snr", "User-1 BER versus SNR");
    add_run_options(ber, ber_opts);
    auto* cap = app.add_subcommand("capacity", "User-1 BER versus number of users");
    add_run_options(cap, cap_opts);
    auto* mse = app.add_subcommand("mse", "Channel-estimate MSE per symbol index");
    add_run_options(mse, mse_opts);
    auto* nf = app.add_subcommand("near-far", "User-1 BER versus SNR per interferer level");
    add_run_options(nf, nf_opts);

    std::string stats_path;
    auto* stats = app.add_subcommand("stats", "Friedman and Wilcoxon tests on a score matrix");
    stats->add_option("scores", stats_path, "CSV: algorithm names, then one row per problem")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    try {
        if (*ber) {
            return run(memud::ExperimentKind::ber_vs_snr, ber_opts, ber);
        }
        if (*cap) {
            return run(memud::ExperimentKind::capacity, cap_opts, cap);
        }
        if (*mse) {
            return run(memud::ExperimentKind::channel_mse, mse_opts, mse);
        }
        if (*nf) {
            return run(memud::ExperimentKind::near_far, nf_opts, nf);
        }
        if (*stats) {
            return run_stats(stats_path);
        }
    } catch (const memud::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_runtime;
    }
    return exit_config;
}
