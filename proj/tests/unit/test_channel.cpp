#include <doctest.h>

#include <cmath>
#include <numbers>

#include "memud/channel.hpp"

using namespace memud;

namespace {

ChannelState state_of(std::vector<cplx> b, std::vector<double> e, double alpha, double phi,
                      double nv) {
    ChannelState s;
    s.fading = std::move(b);
    s.energies = std::move(e);
    s.alpha = alpha;
    s.phi_std = phi;
    s.noise_var = nv;
    return s;
}

}  // namespace

TEST_CASE("fading recursion without innovation is deterministic") {
    Rng rng(1);
    auto s = state_of({cplx(1, 0), cplx(0.3, -0.4)}, {1, 1}, 1.0, 0.0, 0.0);
    auto t = evolve_fading(s, rng);
    CHECK(t.fading == s.fading);
    s.alpha = 0.9;
    t = evolve_fading(s, rng);
    CHECK(t.fading[0] == cplx(0.9, 0.0));
    CHECK(std::abs(t.fading[1] - cplx(0.27, -0.36)) < 1e-15);
}

TEST_CASE("AR(1) long-run variance matches phi^2 / (1 - alpha^2)") {
    Rng rng(2);
    const double alpha = 0.9;
    const double phi = 0.3;
    auto s = state_of({cplx(0, 0)}, {1}, alpha, phi, 0.0);
    for (int k = 0; k < 1000; ++k) {
        s = evolve_fading(s, rng);
    }
    const int steps = 200000;
    double sum_re = 0.0;
    double sum_sq = 0.0;
    for (int k = 0; k < steps; ++k) {
        s = evolve_fading(s, rng);
        sum_re += s.fading[0].real();
        sum_sq += s.fading[0].real() * s.fading[0].real();
    }
    const double mean = sum_re / steps;
    const double var = sum_sq / steps - mean * mean;
    CHECK(var == doctest::Approx(phi * phi / (1 - alpha * alpha)).epsilon(0.05));
}

TEST_CASE("stationary innovation keeps unit power") {
    const double alpha = 0.99;
    const double phi = stationary_phi_std(alpha);
    CHECK(2 * phi * phi / (1 - alpha * alpha) == doctest::Approx(1.0));
    CHECK(alpha_from_doppler(0.0, 1e-3) == doctest::Approx(1.0));
    CHECK(alpha_from_doppler(10.0, 1e-3) ==
          doctest::Approx(std::exp(-2 * std::numbers::pi * 10.0 * 1e-3)));
}

TEST_CASE("fading of distinct users is uncorrelated") {
    Rng rng(3);
    const double alpha = 0.9;
    auto s = state_of(initial_fading(2, InitialFading::rayleigh, rng), {1, 1}, alpha,
                      stationary_phi_std(alpha), 0.0);
    const int steps = 100000;
    cplx cross = 0.0;
    double p0 = 0.0;
    double p1 = 0.0;
    for (int k = 0; k < steps; ++k) {
        s = evolve_fading(s, rng);
        cross += s.fading[0] * std::conj(s.fading[1]);
        p0 += std::norm(s.fading[0]);
        p1 += std::norm(s.fading[1]);
    }
    CHECK(std::abs(cross) / std::sqrt(p0 * p1) < 0.05);
}

TEST_CASE("noiseless observation with orthogonal codes returns the symbols") {
    const auto set = make_signature_set({{1.0, 0.0}, {0.0, 1.0}});
    Rng rng(4);
    const auto s = state_of({cplx(1, 0), cplx(1, 0)}, {1, 1}, 1.0, 0.0, 0.0);
    const auto f = synthesize_frame(set, s, 50, rng);
    for (Eigen::Index n = 0; n < f.frames(); ++n) {
        for (Eigen::Index i = 0; i < f.users(); ++i) {
            CHECK(f.z(n, i) == cplx(f.x_true(n, i), 0.0));
        }
    }
}

TEST_CASE("noiseless observation equals R B sqrt(E) x") {
    const auto set = generate_gold_set(5, 2, 9);
    Rng rng(5);
    auto s = state_of({cplx(0.6, -0.2), cplx(-0.1, 1.3)}, {1.0, 4.0}, 0.99, 0.07, 0.0);
    const auto f = synthesize_frame(set, s, 30, rng);
    for (Eigen::Index n = 0; n < f.frames(); ++n) {
        ComplexVector a(2);
        for (Eigen::Index i = 0; i < 2; ++i) {
            a(i) = f.b_true(n, i) * std::sqrt(f.energies[i]) * double(f.x_true(n, i));
        }
        const ComplexVector z = set.crosscorr * a;
        CHECK((z - f.z.row(n).transpose()).norm() < 1e-12);
    }
}

TEST_CASE("noise covariance is noise_var * R") {
    const auto set = generate_gold_set(5, 3, 11);
    Rng rng(6);
    const double nv = 0.7;
    auto s = state_of({cplx(1, 0), cplx(1, 0), cplx(1, 0)}, {1, 1, 1}, 1.0, 0.0, nv);
    const auto f = synthesize_frame(set, s, 20000, rng);
    ComplexMatrix cov = ComplexMatrix::Zero(3, 3);
    for (Eigen::Index n = 0; n < f.frames(); ++n) {
        ComplexVector a(3);
        for (Eigen::Index i = 0; i < 3; ++i) {
            a(i) = double(f.x_true(n, i));
        }
        const ComplexVector g = f.z.row(n).transpose() - set.crosscorr * a;
        cov += g * g.adjoint();
    }
    cov /= double(f.frames());
    const ComplexMatrix expected = nv * set.crosscorr.cast<cplx>();
    CHECK((cov - expected).norm() / expected.norm() < 0.05);
}

TEST_CASE("frames differing only in energies and noise level share every draw") {
    const auto set = generate_gold_set(5, 3, 12);
    auto s1 = state_of({cplx(1, 0), cplx(0.5, 0.5), cplx(0, 1)}, {1, 1, 1}, 0.99, 0.1, 0.1);
    auto s2 = s1;
    s2.energies = {1, 10, 10};
    s2.noise_var = 0.01;
    Rng r1(7);
    Rng r2(7);
    const auto f1 = synthesize_frame(set, s1, 40, r1);
    const auto f2 = synthesize_frame(set, s2, 40, r2);
    CHECK(f1.x_true == f2.x_true);
    CHECK(f1.b_true == f2.b_true);
}

TEST_CASE("invalid channel states are rejected") {
    auto s = state_of({cplx(1, 0)}, {1, 1}, 0.99, 0.1, 0.1);
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s = state_of({cplx(1, 0)}, {1}, 1.5, 0.1, 0.1);
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s = state_of({cplx(1, 0)}, {1}, 0.9, 0.1, -1.0);
    CHECK_THROWS_AS(s.validate(), ParameterError);
}
