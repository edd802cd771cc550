#pragma once

#include <filesystem>
#include <vector>

#include "memud/rng.hpp"
#include "memud/spreading.hpp"
#include "memud/types.hpp"

namespace memud {

using SymbolMatrix = Eigen::Matrix<Symbol, Eigen::Dynamic, Eigen::Dynamic>;

/// Time-variant flat-fading state of all users.
///
/// Fading follows the first-order recursion b(n+1) = alpha * b(n) + phi with
/// phi circular complex Gaussian, independent per user. `noise_var` is the
/// variance of the complex noise at each matched-filter output; its
/// covariance across users is noise_var * R.
struct ChannelState {
    std::vector<cplx> fading;
    std::vector<double> energies;
    double alpha = 0.99;
    double phi_std = 0.0;  // per real component
    double noise_var = 0.0;

    std::size_t users() const { return fading.size(); }
    void validate() const;
};

/// alpha = exp(-2*pi*f_d*T).
double alpha_from_doppler(double doppler, double symbol_period);

/// Innovation std that keeps a unit-power fading process stationary.
double stationary_phi_std(double alpha);

enum class InitialFading { rayleigh, unit };

/// b_i(0) is CN(0,1) for rayleigh (unit mean power), exactly 1 for unit.
std::vector<cplx> initial_fading(std::size_t users, InitialFading kind, Rng& rng);

ChannelState evolve_fading(const ChannelState& state, Rng& rng);

/// One frame of matched-filter-bank outputs plus the ground truth that
/// produced it. Rows are symbol periods, columns are users.
struct FrameObservation {
    ComplexMatrix z;       // F x U
    SymbolMatrix x_true;   // F x U
    ComplexMatrix b_true;  // F x U
    RealMatrix r;          // U x U
    std::vector<double> energies;
    double noise_var = 0.0;

    Eigen::Index frames() const { return z.rows(); }
    Eigen::Index users() const { return z.cols(); }
};

/// z(n) = R diag(b(n)) diag(sqrt(E)) x(n) + g(n), g(n) ~ CN(0, noise_var * R).
/// Draw order per symbol period: U symbols, U complex noise samples, then the
/// fading innovation, so frames that differ only in energies or noise level
/// share every random draw.
FrameObservation synthesize_frame(const SignatureSet& set, const ChannelState& state0,
                                  std::size_t frame_length, Rng& rng);

/// Columns: n, user, re_z, im_z, x_true, re_b, im_b.
void write_frame_csv(const FrameObservation& frame, const std::filesystem::path& path);

}  // namespace memud
