#include "memud/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include "memud/stats.hpp"

namespace memud {

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

std::uint64_t detector_seed(std::uint64_t seed, std::uint64_t frame_index,
                            const std::string& detector) {
    // FNV-1a of the name keeps a detector's stream independent of which
    // other detectors run.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : detector) {
        h = (h ^ ch) * 0x100000001b3ULL;
    }
    return derive_seed(derive_seed(seed, frame_index), h);
}

SignatureSet experiment_codes(const ExperimentConfig& cfg, std::size_t users) {
    return generate_gold_set(cfg.degree, users, derive_seed(cfg.seed, 0xC0DE0000ULL + users));
}

FrameObservation make_frame(const SignatureSet& codes, std::span<const double> energies,
                            double noise_var, const ExperimentConfig& cfg, std::uint64_t index) {
    Rng rng(derive_seed(cfg.seed, index));
    ChannelState state;
    state.fading = initial_fading(codes.users(), cfg.initial, rng);
    state.energies.assign(energies.begin(), energies.end());
    state.alpha = cfg.effective_alpha();
    state.phi_std = cfg.effective_phi_std();
    state.noise_var = noise_var;
    return synthesize_frame(codes, state, cfg.frame_length, rng);
}

std::vector<Symbol> alignment_signs(const ComplexMatrix& estimate, const ComplexMatrix& truth) {
    std::vector<Symbol> s(static_cast<std::size_t>(estimate.cols()), Symbol{1});
    for (Eigen::Index i = 0; i < estimate.cols(); ++i) {
        double acc = 0.0;
        for (Eigen::Index n = 0; n < estimate.rows(); ++n) {
            acc += (std::conj(estimate(n, i)) * truth(n, i)).real();
        }
        s[static_cast<std::size_t>(i)] = sign_of(acc);
    }
    return s;
}

ErrorCount score_user(const FrameObservation& frame, const DetectorOutput& out, std::size_t user,
                      Scoring scoring) {
    const auto u = static_cast<Eigen::Index>(user);
    const Eigen::Index f = frame.frames();
    ErrorCount c;
    const bool blind = out.b_hat.size() > 0;
    if (blind && scoring == Scoring::differential) {
        for (Eigen::Index n = 1; n < f; ++n) {
            const int est = out.x_hat(n, u) * out.x_hat(n - 1, u);
            const int ref = frame.x_true(n, u) * frame.x_true(n - 1, u);
            c.errors += est != ref ? 1 : 0;
        }
        c.bits = static_cast<std::uint64_t>(f - 1);
        return c;
    }
    Symbol s{1};
    if (blind) {
        s = alignment_signs(out.b_hat.col(u), frame.b_true.col(u))[0];
    }
    for (Eigen::Index n = 0; n < f; ++n) {
        c.errors += out.x_hat(n, u) * s != frame.x_true(n, u) ? 1 : 0;
    }
    c.bits = static_cast<std::uint64_t>(f);
    return c;
}

namespace {

std::vector<double> energies_for(std::size_t users, double e1, double near_far_db) {
    std::vector<double> e(users, e1 * std::pow(10.0, near_far_db / 10.0));
    e[0] = e1;
    return e;
}

// Energy of user 1 and noise variance at one SNR.
std::pair<double, double> operating_point(const ExperimentConfig& cfg, double snr_db) {
    const double ratio = std::pow(10.0, snr_db / 10.0);
    if (cfg.noise_var) {
        return {*cfg.noise_var * ratio, cfg.noiseless ? 0.0 : *cfg.noise_var};
    }
    return {1.0, cfg.noiseless ? 0.0 : 1.0 / ratio};
}

// Index of the detector whose GA trace is recorded, if any.
std::optional<std::size_t> traced_detector(const ExperimentConfig& cfg) {
    for (const char* name : {"ma", "std-ga"}) {
        for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
            if (cfg.detectors[d] == name) {
                return d;
            }
        }
    }
    return std::nullopt;
}

struct FrameRun {
    std::vector<DetectorOutput> outputs;
    FrameObservation frame;
};

// Runs every configured detector on frame `index`.
FrameRun run_frame(const ExperimentConfig& cfg, const SignatureSet& codes,
                   std::span<const double> energies, double noise_var,
                   const DetectorSettings& settings, std::uint64_t index, bool trace) {
    FrameRun run;
    run.frame = make_frame(codes, energies, noise_var, cfg, index);
    const auto traced = traced_detector(cfg);
    for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
        const auto& name = cfg.detectors[d];
        DetectorSettings s = settings;
        if (trace && traced == d) {
            s.ma.record_trace = true;
            s.std_ga.record_trace = true;
        }
        Rng rng(detector_seed(cfg.seed, index, name));
        run.outputs.push_back(detector_by_name(name)(run.frame, s, rng));
    }
    return run;
}

// User-1 error counts per detector, summed over frames in index order.
std::vector<ErrorCount> ber_point(const ExperimentConfig& cfg, const SignatureSet& codes,
                                  std::span<const double> energies, double noise_var,
                                  std::vector<GenerationTrace>* trace) {
    const DetectorSettings settings = cfg.settings_for(codes.users());
    const std::size_t nd = cfg.detectors.size();
    std::vector<std::vector<ErrorCount>> per_frame(cfg.frames, std::vector<ErrorCount>(nd));
    std::vector<GenerationTrace> first_trace;
    parallel_for(cfg.frames, cfg.workers, [&](std::size_t f) {
        const bool want_trace = trace != nullptr && f == 0;
        FrameRun run = run_frame(cfg, codes, energies, noise_var, settings, f, want_trace);
        for (std::size_t d = 0; d < nd; ++d) {
            per_frame[f][d] = score_user(run.frame, run.outputs[d], 0, cfg.scoring);
            if (want_trace && traced_detector(cfg) == d) {
                first_trace = std::move(run.outputs[d].trace);
            }
        }
    });
    std::vector<ErrorCount> total(nd);
    for (const auto& row : per_frame) {
        for (std::size_t d = 0; d < nd; ++d) {
            total[d].errors += row[d].errors;
            total[d].bits += row[d].bits;
        }
    }
    if (trace) {
        *trace = std::move(first_trace);
    }
    return total;
}

CurvePoint ber_curve_point(const ExperimentConfig& cfg, double x, const std::string& label,
                           const ErrorCount& c) {
    CurvePoint p;
    p.x = x;
    p.detector = label;
    p.trials = c.bits;
    p.errors = c.errors;
    p.metric = c.bits ? static_cast<double>(c.errors) / static_cast<double>(c.bits) : 0.0;
    p.ci = wilson_interval(c.errors, c.bits).halfwidth();
    p.low_confidence = p.metric < 1e-3 && c.errors < cfg.min_error_events;
    return p;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

ExperimentResult run_ber_vs_snr(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    const SignatureSet codes = experiment_codes(cfg, cfg.users);
    bool first = true;
    for (double snr : cfg.snr_db) {
        const auto [e1, nv] = operating_point(cfg, snr);
        const auto energies = energies_for(cfg.users, e1, cfg.near_far_db);
        const auto counts = ber_point(cfg, codes, energies, nv,
                                      cfg.trace && first ? &res.trace : nullptr);
        for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
            res.table.push_back(ber_curve_point(cfg, snr, cfg.detectors[d], counts[d]));
        }
        first = false;
    }
    return res;
}

ExperimentResult run_capacity(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    const double snr = cfg.snr_db.front();
    bool first = true;
    for (std::size_t u : cfg.users_grid) {
        if (u > max_ml_users &&
            std::find(cfg.detectors.begin(), cfg.detectors.end(), "ml-oracle") !=
                cfg.detectors.end()) {
            throw ConfigError("ml-oracle cannot run with more than 16 users");
        }
        const SignatureSet codes = experiment_codes(cfg, u);
        const auto [e1, nv] = operating_point(cfg, snr);
        const auto energies = energies_for(u, e1, 0.0);
        const auto counts =
            ber_point(cfg, codes, energies, nv, cfg.trace && first ? &res.trace : nullptr);
        for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
            res.table.push_back(
                ber_curve_point(cfg, static_cast<double>(u), cfg.detectors[d], counts[d]));
        }
        first = false;
    }
    return res;
}

ExperimentResult run_near_far(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentConfig local = cfg;
    if (!local.noise_var) {
        local.noise_var = 0.5;
    }
    ExperimentResult res;
    const SignatureSet codes = experiment_codes(local, local.users);
    bool first = true;
    for (double nf : local.near_far_grid_db) {
        for (double snr : local.snr_db) {
            const auto [e1, nv] = operating_point(local, snr);
            const auto energies = energies_for(local.users, e1, nf);
            const auto counts =
                ber_point(local, codes, energies, nv, local.trace && first ? &res.trace : nullptr);
            for (std::size_t d = 0; d < local.detectors.size(); ++d) {
                const std::string label = local.detectors[d] + "/nf=" + format_number(nf);
                res.table.push_back(ber_curve_point(local, snr, label, counts[d]));
            }
            first = false;
        }
    }
    return res;
}

ExperimentResult run_channel_mse(const ExperimentConfig& cfg) {
    cfg.validate();
    for (const auto& d : cfg.detectors) {
        if (!is_blind(d)) {
            throw ConfigError("channel MSE needs channel-estimating detectors (ma, std-ga), got '" +
                              d + "'");
        }
    }
    ExperimentResult res;
    const SignatureSet codes = experiment_codes(cfg, cfg.users);
    const auto [e1, nv] = operating_point(cfg, cfg.snr_db.front());
    const auto energies = energies_for(cfg.users, e1, cfg.near_far_db);
    const DetectorSettings settings = cfg.settings_for(cfg.users);
    const std::size_t nd = cfg.detectors.size();
    const std::size_t len = cfg.frame_length;
    const std::size_t u = cfg.users;

    // sq[f][d][k * u + i] = |s_i est(k, i) - b(k, i)|^2 where row k = 0 is the
    // initial estimate and row k = n + 1 follows observation n.
    const std::size_t rows = len + 1;
    std::vector<std::vector<std::vector<double>>> sq(
        cfg.frames, std::vector<std::vector<double>>(nd, std::vector<double>(rows * u)));
    parallel_for(cfg.frames, cfg.workers, [&](std::size_t f) {
        const bool want_trace = cfg.trace && f == 0;
        FrameRun run = run_frame(cfg, codes, energies, nv, settings, f, want_trace);
        const ComplexMatrix& truth = run.frame.b_true;
        for (std::size_t d = 0; d < nd; ++d) {
            const DetectorOutput& out = run.outputs[d];
            const ComplexMatrix& est =
                cfg.mse_estimate == MseEstimate::tracked ? out.b_track : out.b_hat;
            const auto s = alignment_signs(est, truth);
            for (std::size_t i = 0; i < u; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                sq[f][d][i] = std::norm(static_cast<double>(s[i]) * out.b_init[i] - truth(0, ii));
                for (std::size_t n = 0; n < len; ++n) {
                    const auto ni = static_cast<Eigen::Index>(n);
                    sq[f][d][(n + 1) * u + i] =
                        std::norm(static_cast<double>(s[i]) * est(ni, ii) - truth(ni, ii));
                }
            }
            if (want_trace && traced_detector(cfg) == d) {
                res.trace = std::move(run.outputs[d].trace);
            }
        }
    });
    for (std::size_t k = 0; k < rows; ++k) {
        for (std::size_t d = 0; d < nd; ++d) {
            std::vector<double> samples;
            samples.reserve(cfg.frames * u);
            for (std::size_t f = 0; f < cfg.frames; ++f) {
                for (std::size_t i = 0; i < u; ++i) {
                    samples.push_back(sq[f][d][k * u + i]);
                }
            }
            const Interval ci = normal_mean_interval(samples);
            CurvePoint p;
            p.x = static_cast<double>(k);
            p.detector = cfg.detectors[d];
            p.metric = 0.5 * (ci.low + ci.high);
            p.trials = samples.size();
            p.ci = ci.halfwidth();
            res.table.push_back(p);
        }
    }
    return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
        case ExperimentKind::ber_vs_snr:
            return run_ber_vs_snr(cfg);
        case ExperimentKind::capacity:
            return run_capacity(cfg);
        case ExperimentKind::channel_mse:
            return run_channel_mse(cfg);
        case ExperimentKind::near_far:
            return run_near_far(cfg);
    }
    throw ConfigError("unknown experiment kind");
}

std::string format_csv(const Table& table) {
    std::string out = "x,detector,metric,trials,ci,low_confidence\n";
    for (const auto& p : table) {
        out += format_number(p.x);
        out += ',';
        out += p.detector;
        out += ',';
        out += format_number(p.metric);
        out += ',';
        out += std::to_string(p.trials);
        out += ',';
        out += format_number(p.ci);
        out += ',';
        out += p.low_confidence ? '1' : '0';
        out += '\n';
    }
    return out;
}

void emit_csv(const Table& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << format_csv(table);
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace memud
