#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "memud/channel.hpp"
#include "memud/genetic.hpp"
#include "memud/local_search.hpp"

namespace memud {

struct DetectorOutput {
    SymbolMatrix x_hat;  // F x U, entries +-1
    // Final channel estimates paired with x_hat; empty for genie-aided detectors.
    ComplexMatrix b_hat;
    // Smoothed channel reference after each symbol period. Empty when the
    // detector does not track.
    ComplexMatrix b_track;
    // Channel estimate before the first observation: the quantized genie
    // value, or the prior mean 0. Empty for genie-aided detectors.
    std::vector<cplx> b_init;
    std::uint64_t evals_used = 0;
    std::uint64_t ga_evals = 0;
    std::uint64_t ls_evals = 0;
    // GA trace of the first symbol period, when requested.
    std::vector<GenerationTrace> trace;
};

enum class WarmSource {
    ga,         // best chromosome of the GA stage
    refined,    // output of local search
    reference,  // smoothed channel reference
};

struct MaConfig {
    GAConfig ga;
    LkConfig lk;
    // Seed the first symbol period with the true fading instead of the prior.
    bool genie_init = true;
    WarmSource warm_from = WarmSource::refined;
    // ref(n) = lambda * ref(n-1) + (1 - lambda) * b_hat(n); 0 keeps the last estimate.
    double reference_smoothing = 0.8;
    bool record_trace = false;
};

struct StdGaConfig {
    GAConfig ga = default_ga();
    bool genie_init = true;
    double reference_smoothing = 0.8;
    bool record_trace = false;

    /// n_p = 300, n_g = 500, fixed p_m = 0.05 and p_c = 0.01.
    static GAConfig default_ga();
};

/// Negates (b_i, x_i) for every user whose estimate points away from
/// reference[i] (Re{conj(b_i) ref_i} < 0). The metric is unchanged.
void resolve_sign_ambiguity(Chromosome& c, std::span<const cplx> reference);

/// GA per symbol period, warm-started from the previous period, followed by
/// local search on the GA's best chromosome. Both stage outputs are sign
/// resolved against the smoothed channel reference of the previous period.
DetectorOutput detect_ma(const FrameObservation& frame, const MaConfig& cfg, Rng& rng);

/// The same per-symbol GA without local search and without rate adaptation.
DetectorOutput detect_std_ga(const FrameObservation& frame, const StdGaConfig& cfg, Rng& rng);

/// sign(Re{b_i^* z_i}) with the true fading.
DetectorOutput detect_mf(const FrameObservation& frame);

/// sign(Re{b_i^* (R^-1 z)_i}) with the true fading. Throws NumericalError for singular R.
DetectorOutput detect_decorrelator(const FrameObservation& frame);

/// sign(Re{C_xz C_zz^-1 z}) with C_xz = A^H R, C_zz = R A A^H R + sigma^2 R and
/// A = diag(b_i sqrt(E_i)). Throws NumericalError for a singular covariance.
DetectorOutput detect_mmse(const FrameObservation& frame);

/// Exhaustive maximization of the metric over {+-1}^U with the true fading.
/// evals_used counts enumerated candidates. Refuses U > max_ml_users.
inline constexpr std::size_t max_ml_users = 16;
DetectorOutput detect_ml_oracle(const FrameObservation& frame);

/// Best symbol vector for one observation with known amplitudes sqrt(E_i) b_i.
/// Ties keep the first candidate in enumeration order (user 0 is the least
/// significant bit, bit 0 meaning +1).
std::vector<Symbol> ml_symbols(const FitnessContext& ctx, std::span<const cplx> b);

struct DetectorSettings {
    MaConfig ma;
    StdGaConfig std_ga;
};

using DetectorFn =
    std::function<DetectorOutput(const FrameObservation&, const DetectorSettings&, Rng&)>;

/// Names: ma, std-ga, mf, decorrelator, mmse, ml-oracle.
const std::vector<std::string>& detector_names();
bool is_detector(const std::string& name);
/// Throws ParameterError for an unknown name.
DetectorFn detector_by_name(const std::string& name);
/// True for detectors whose decisions carry a blind sign ambiguity.
bool is_blind(const std::string& name);

}  // namespace memud
