#include "memud/channel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace memud {

void ChannelState::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ParameterError("channel alpha must lie in (0, 1]");
    }
    if (!(phi_std >= 0.0) || !(noise_var >= 0.0)) {
        throw ParameterError("channel noise levels must be non-negative");
    }
    if (energies.size() != fading.size()) {
        throw ParameterError("channel energies and fading sizes differ");
    }
    for (double e : energies) {
        if (!(e > 0.0)) {
            throw ParameterError("user energies must be positive");
        }
    }
}

double alpha_from_doppler(double doppler, double symbol_period) {
    if (!(doppler >= 0.0) || !(symbol_period > 0.0)) {
        throw ParameterError("doppler must be >= 0 and symbol period > 0");
    }
    return std::exp(-2.0 * std::numbers::pi * doppler * symbol_period);
}

double stationary_phi_std(double alpha) { return std::sqrt((1.0 - alpha * alpha) / 2.0); }

std::vector<cplx> initial_fading(std::size_t users, InitialFading kind, Rng& rng) {
    std::vector<cplx> b(users, cplx{1.0, 0.0});
    if (kind == InitialFading::rayleigh) {
        for (auto& v : b) {
            v = complex_gaussian(rng, std::sqrt(0.5));
        }
    }
    return b;
}

ChannelState evolve_fading(const ChannelState& state, Rng& rng) {
    ChannelState next = state;
    for (auto& b : next.fading) {
        const cplx phi = complex_gaussian(rng, 1.0);
        b = state.alpha * b + state.phi_std * phi;
    }
    return next;
}

namespace {

// Square root factor L with L L^T = R. Falls back to the symmetric
// eigendecomposition when R is only semidefinite.
RealMatrix correlation_factor(const RealMatrix& r) {
    Eigen::LLT<RealMatrix> llt(r);
    if (llt.info() == Eigen::Success) {
        return llt.matrixL();
    }
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(r);
    const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * roots.asDiagonal();
}

}  // namespace

FrameObservation synthesize_frame(const SignatureSet& set, const ChannelState& state0,
                                  std::size_t frame_length, Rng& rng) {
    state0.validate();
    const auto u = static_cast<Eigen::Index>(set.users());
    if (static_cast<Eigen::Index>(state0.users()) != u) {
        throw ParameterError("channel state and signature set disagree on user count");
    }
    if (frame_length < 1) {
        throw ParameterError("frame length must be at least 1");
    }
    const auto f = static_cast<Eigen::Index>(frame_length);

    FrameObservation obs;
    obs.z.resize(f, u);
    obs.x_true.resize(f, u);
    obs.b_true.resize(f, u);
    obs.r = set.crosscorr;
    obs.energies = state0.energies;
    obs.noise_var = state0.noise_var;

    const RealMatrix factor = correlation_factor(set.crosscorr);
    const double noise_scale = std::sqrt(state0.noise_var);

    ChannelState state = state0;
    ComplexVector amp(u);
    ComplexVector w(u);
    for (Eigen::Index n = 0; n < f; ++n) {
        for (Eigen::Index i = 0; i < u; ++i) {
            obs.x_true(n, i) = random_symbol(rng);
        }
        for (Eigen::Index i = 0; i < u; ++i) {
            w(i) = complex_gaussian(rng, std::sqrt(0.5));
        }
        for (Eigen::Index i = 0; i < u; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            obs.b_true(n, i) = state.fading[ui];
            amp(i) = state.fading[ui] * std::sqrt(state.energies[ui]) *
                     static_cast<double>(obs.x_true(n, i));
        }
        const ComplexVector z = set.crosscorr * amp + noise_scale * (factor * w);
        obs.z.row(n) = z.transpose();
        state = evolve_fading(state, rng);
    }
    return obs;
}

void write_frame_csv(const FrameObservation& frame, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "n,user,re_z,im_z,x_true,re_b,im_b\n";
    char buf[160];
    for (Eigen::Index n = 0; n < frame.frames(); ++n) {
        for (Eigen::Index i = 0; i < frame.users(); ++i) {
            std::snprintf(buf, sizeof buf, "%ld,%ld,%.17g,%.17g,%d,%.17g,%.17g\n",
                          static_cast<long>(n), static_cast<long>(i), frame.z(n, i).real(),
                          frame.z(n, i).imag(), static_cast<int>(frame.x_true(n, i)),
                          frame.b_true(n, i).real(), frame.b_true(n, i).imag());
            out << buf;
        }
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace memud
