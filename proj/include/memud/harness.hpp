#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "memud/config.hpp"

namespace memud {

struct CurvePoint {
    double x = 0.0;  // SNR dB, user count or symbol index
    std::string detector;
    double metric = 0.0;  // BER or MSE
    std::uint64_t trials = 0;
    std::uint64_t errors = 0;  // BER points only
    double ci = 0.0;           // 95% halfwidth
    // BER below 1e-3 resting on fewer than the configured error events.
    bool low_confidence = false;
};

using Table = std::vector<CurvePoint>;

struct ExperimentResult {
    Table table;
    // GA trace of the memetic detector on the first frame of the first point.
    std::vector<GenerationTrace> trace;
};

/// Runs the experiment selected by cfg.kind.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// User-1 BER over the SNR grid; interferers at near_far_db above user 1.
ExperimentResult run_ber_vs_snr(const ExperimentConfig& cfg);
/// User-1 BER over users_grid at the first SNR, equal energies.
ExperimentResult run_capacity(const ExperimentConfig& cfg);
/// Mean |b_hat - b|^2 per symbol index over frames and users. Index 0 is the
/// estimate before any observation; index n + 1 follows observation n.
ExperimentResult run_channel_mse(const ExperimentConfig& cfg);
/// User-1 BER over the SNR grid for every level of near_far_grid_db, with a
/// fixed noise variance (default 0.5). Series are labelled "<detector>/nf=<dB>".
ExperimentResult run_near_far(const ExperimentConfig& cfg);

struct ErrorCount {
    std::uint64_t errors = 0;
    std::uint64_t bits = 0;
};

/// Errors of one user in one frame. Blind outputs (non-empty b_hat) are
/// scored according to `scoring`.
ErrorCount score_user(const FrameObservation& frame, const DetectorOutput& out, std::size_t user,
                      Scoring scoring);

/// Per-user sign s_i = sign(Re sum_n conj(est(n,i)) b(n,i)); +1 on zero.
std::vector<Symbol> alignment_signs(const ComplexMatrix& estimate, const ComplexMatrix& truth);

/// Synthesizes frame `index` of an experiment. The frame seed depends only on
/// (seed, index), so every grid point and detector sees the same draws.
FrameObservation make_frame(const SignatureSet& codes, std::span<const double> energies,
                            double noise_var, const ExperimentConfig& cfg, std::uint64_t index);

/// Seed of the random stream a detector uses on a frame.
std::uint64_t detector_seed(std::uint64_t seed, std::uint64_t frame_index,
                            const std::string& detector);

/// Spreading codes for `users` users, chosen from the master seed.
SignatureSet experiment_codes(const ExperimentConfig& cfg, std::size_t users);

/// Calls fn(i) for i in [0, count) on `workers` threads.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

/// Header: x,detector,metric,trials,ci,low_confidence
std::string format_csv(const Table& table);
void emit_csv(const Table& table, const std::filesystem::path& path);

}  // namespace memud
