#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "memud/channel.hpp"
#include "memud/detectors.hpp"

namespace memud {

enum class ExperimentKind { ber_vs_snr, capacity, channel_mse, near_far };

enum class Scoring {
    // Per user and frame, decisions of blind detectors are multiplied by
    // sign(Re sum_n conj(b_hat) b) before comparison.
    aligned,
    // Blind detectors are scored on x(n) x(n-1); F - 1 bits per frame.
    differential,
};

enum class MseEstimate { tracked, final };

/// Explicit GA sizing; unset fields fall back to the per-user-count defaults.
struct GaSizing {
    std::optional<std::size_t> population;
    std::optional<std::size_t> generations;
    std::optional<std::uint64_t> budget;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::ber_vs_snr;
    std::vector<std::string> detectors{"ma", "mmse", "decorrelator", "mf"};

    std::size_t users = 10;
    std::vector<std::size_t> users_grid{2, 4, 6, 8, 10, 12, 14};
    int degree = 5;
    std::size_t frame_length = 100;
    std::size_t frames = 50;

    std::vector<double> snr_db{0, 2, 4, 6, 8, 10, 12, 14};
    // Interferer energy over user-1 energy, in dB.
    double near_far_db = 4.0;
    std::vector<double> near_far_grid_db{0, 5, 10, 15};
    // Fixed noise variance; user-1 energy then follows from the SNR.
    std::optional<double> noise_var;
    bool noiseless = false;

    double alpha = 0.99;
    std::optional<double> doppler;
    std::optional<double> symbol_period;
    std::optional<double> phi_std;
    InitialFading initial = InitialFading::rayleigh;
    // alpha = 1 and no innovation.
    bool static_channel = false;

    MaConfig ma;
    StdGaConfig std_ga;
    GaSizing ma_size;
    GaSizing std_size;

    std::uint64_t seed = 1;
    std::size_t workers = 1;
    std::uint64_t min_error_events = 100;
    Scoring scoring = Scoring::aligned;
    MseEstimate mse_estimate = MseEstimate::tracked;

    std::filesystem::path output = "results.csv";
    bool trace = false;

    double effective_alpha() const;
    double effective_phi_std() const;
    /// Detector settings with the GA sized for `users` active users.
    DetectorSettings settings_for(std::size_t users) const;
    void validate() const;
};

/// Defaults tuned to each experiment (user count, grids, initialization).
ExperimentConfig default_config(ExperimentKind kind);

ExperimentKind parse_kind(const std::string& text);
std::string kind_name(ExperimentKind kind);

/// Applies an INI file on top of `cfg`. Sections: experiment, channel, ma,
/// stdga, output. Unknown sections or keys, and malformed values, raise
/// ConfigError.
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);
void apply_config_text(ExperimentConfig& cfg, const std::string& text);

/// Sets one "section.key" to a textual value with the same rules.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Every recognized "section.key".
std::vector<std::string> config_keys();

/// Comma list; numeric lists also accept start:step:stop ranges.
std::vector<double> parse_double_list(const std::string& text);
std::vector<std::string> parse_name_list(const std::string& text);

/// Default (n_p, n_g) pairs for the memetic and the standard GA by user count.
struct GaTableEntry {
    std::size_t ma_population;
    std::size_t ma_generations;
    std::size_t std_population;
    std::size_t std_generations;
};
GaTableEntry ga_table(std::size_t users);

}  // namespace memud
