#include "memud/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace memud {

GAConfig StdGaConfig::default_ga() {
    GAConfig ga;
    ga.population = 300;
    ga.p_m0 = 0.05;
    ga.p_c0 = 0.01;
    ga.adaptive = false;
    ga.eval_budget = GAConfig::budget_for(300, 500, ga.p_m0, ga.p_c0);
    return ga;
}

namespace {

std::vector<cplx> row_of(const ComplexMatrix& m, Eigen::Index n) {
    std::vector<cplx> out(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
        out[static_cast<std::size_t>(i)] = m(n, i);
    }
    return out;
}

DetectorOutput shaped_output(const FrameObservation& frame, bool with_channel) {
    DetectorOutput out;
    out.x_hat.resize(frame.frames(), frame.users());
    if (with_channel) {
        out.b_hat.resize(frame.frames(), frame.users());
        out.b_track.resize(frame.frames(), frame.users());
    }
    return out;
}

// Per-symbol GA pipeline shared by the memetic and the standard detector.
DetectorOutput run_genetic(const FrameObservation& frame, const GAConfig& ga_cfg,
                           const LkConfig* lk, bool genie_init, WarmSource warm_from,
                           double smoothing, bool record_trace, Rng& rng) {
    ga_cfg.validate();
    if (lk) {
        lk->validate();
    }
    if (!(smoothing >= 0.0 && smoothing < 1.0)) {
        throw ParameterError("reference smoothing must lie in [0, 1)");
    }
    FitnessContext ctx(frame.r, frame.energies);
    DetectorOutput out = shaped_output(frame, true);
    std::optional<std::vector<cplx>> warm;
    std::optional<std::vector<cplx>> ref;
    out.b_init.assign(static_cast<std::size_t>(frame.users()), cplx(0.0, 0.0));
    if (genie_init) {
        warm = row_of(frame.b_true, 0);
        ref = warm;
        for (std::size_t i = 0; i < warm->size(); ++i) {
            const cplx b = (*warm)[i];
            out.b_init[i] = {Quantizer::decode(Quantizer::encode(b.real())),
                             Quantizer::decode(Quantizer::encode(b.imag()))};
        }
    }
    for (Eigen::Index n = 0; n < frame.frames(); ++n) {
        const auto z = row_of(frame.z, n);
        ctx.set_observation(std::span<const cplx>(z));
        std::optional<std::span<const cplx>> warm_span;
        if (warm) {
            warm_span = std::span<const cplx>(*warm);
        }
        GAResult ga = run_ga(ga_cfg, ctx, warm_span, rng, record_trace && n == 0);
        out.ga_evals += ga.evaluations;
        if (record_trace && n == 0) {
            out.trace = std::move(ga.trace);
        }
        if (ref) {
            resolve_sign_ambiguity(ga.best, *ref);
        }
        Chromosome final = ga.best;
        if (lk) {
            RefineResult r = refine(ctx, ga.best, *lk);
            out.ls_evals += r.evaluations;
            final = std::move(r.chromosome);
            if (ref) {
                resolve_sign_ambiguity(final, *ref);
            }
        }
        const auto b_final = final.channels();
        const auto b_ga = ga.best.channels();
        const auto& b_new = warm_from == WarmSource::refined ? b_final : b_ga;
        if (ref) {
            for (std::size_t i = 0; i < b_new.size(); ++i) {
                (*ref)[i] = smoothing * (*ref)[i] + (1.0 - smoothing) * b_new[i];
            }
        } else {
            ref = b_new;
        }
        warm = warm_from == WarmSource::reference ? *ref : b_new;
        for (Eigen::Index i = 0; i < frame.users(); ++i) {
            const auto ui = static_cast<std::size_t>(i);
            out.x_hat(n, i) = final.symbol(ui);
            out.b_hat(n, i) = b_final[ui];
            out.b_track(n, i) = (*ref)[ui];
        }
    }
    out.evals_used = out.ga_evals + out.ls_evals;
    return out;
}

}  // namespace

void resolve_sign_ambiguity(Chromosome& c, std::span<const cplx> reference) {
    if (reference.size() != c.users()) {
        throw ParameterError("sign resolution: reference has the wrong number of users");
    }
    constexpr std::size_t component = Chromosome::channel_genes_per_user / 2;
    for (std::size_t i = 0; i < c.users(); ++i) {
        const cplx b = c.channel(i);
        if (b.real() * reference[i].real() + b.imag() * reference[i].imag() >= 0.0) {
            continue;
        }
        const auto cached = c.cached_fitness();
        const std::size_t base = i * Chromosome::channel_genes_per_user;
        c.flip(base);
        c.flip(base + component);
        c.flip(c.symbol_offset() + i);
        if (cached) {
            c.set_cached_fitness(*cached);
        }
    }
}

namespace {

Symbol phase_compensated(cplx b, cplx y) {
    return sign_of(b.real() * y.real() + b.imag() * y.imag());
}

}  // namespace

DetectorOutput detect_ma(const FrameObservation& frame, const MaConfig& cfg, Rng& rng) {
    return run_genetic(frame, cfg.ga, &cfg.lk, cfg.genie_init, cfg.warm_from,
                       cfg.reference_smoothing, cfg.record_trace, rng);
}

DetectorOutput detect_std_ga(const FrameObservation& frame, const StdGaConfig& cfg, Rng& rng) {
    GAConfig ga = cfg.ga;
    ga.adaptive = false;
    return run_genetic(frame, ga, nullptr, cfg.genie_init, WarmSource::ga, cfg.reference_smoothing,
                       cfg.record_trace, rng);
}

DetectorOutput detect_mf(const FrameObservation& frame) {
    DetectorOutput out = shaped_output(frame, false);
    for (Eigen::Index n = 0; n < frame.frames(); ++n) {
        for (Eigen::Index i = 0; i < frame.users(); ++i) {
            out.x_hat(n, i) = phase_compensated(frame.b_true(n, i), frame.z(n, i));
        }
    }
    return out;
}

DetectorOutput detect_decorrelator(const FrameObservation& frame) {
    Eigen::FullPivLU<RealMatrix> lu(frame.r);
    if (!lu.isInvertible()) {
        throw NumericalError("decorrelator: cross-correlation matrix is singular");
    }
    const RealMatrix r_inv = lu.inverse();
    DetectorOutput out = shaped_output(frame, false);
    for (Eigen::Index n = 0; n < frame.frames(); ++n) {
        const ComplexVector y = r_inv * frame.z.row(n).transpose();
        for (Eigen::Index i = 0; i < frame.users(); ++i) {
            out.x_hat(n, i) = phase_compensated(frame.b_true(n, i), y(i));
        }
    }
    return out;
}

DetectorOutput detect_mmse(const FrameObservation& frame) {
    const Eigen::Index u = frame.users();
    const ComplexMatrix r = frame.r.cast<cplx>();
    DetectorOutput out = shaped_output(frame, false);
    ComplexMatrix a = ComplexMatrix::Zero(u, u);
    for (Eigen::Index n = 0; n < frame.frames(); ++n) {
        for (Eigen::Index i = 0; i < u; ++i) {
            a(i, i) = frame.b_true(n, i) * std::sqrt(frame.energies[static_cast<std::size_t>(i)]);
        }
        const ComplexMatrix ra = r * a;
        const ComplexMatrix c_zz = ra * ra.adjoint() + frame.noise_var * r;
        const ComplexMatrix c_xz = a.adjoint() * r;
        Eigen::FullPivLU<ComplexMatrix> lu(c_zz);
        if (!lu.isInvertible()) {
            throw NumericalError("mmse: observation covariance is singular");
        }
        const ComplexVector soft = c_xz * lu.solve(ComplexVector(frame.z.row(n).transpose()));
        for (Eigen::Index i = 0; i < u; ++i) {
            out.x_hat(n, i) = sign_of(soft(i).real());
        }
    }
    return out;
}

std::vector<Symbol> ml_symbols(const FitnessContext& ctx, std::span<const cplx> b) {
    const std::size_t u = ctx.users();
    if (u > max_ml_users) {
        throw ParameterError("ml oracle: refusing exhaustive search over more than 16 users");
    }
    const auto se = ctx.sqrt_energy();
    std::vector<cplx> a(u);
    std::vector<Symbol> best(u, Symbol{1});
    double best_value = -std::numeric_limits<double>::infinity();
    const std::uint64_t count = std::uint64_t{1} << u;
    for (std::uint64_t m = 0; m < count; ++m) {
        for (std::size_t i = 0; i < u; ++i) {
            a[i] = ((m >> i) & 1u ? -se[i] : se[i]) * b[i];
        }
        const double v = likelihood_of_amplitudes(ctx, a);
        if (v > best_value) {
            best_value = v;
            for (std::size_t i = 0; i < u; ++i) {
                best[i] = (m >> i) & 1u ? Symbol{-1} : Symbol{1};
            }
        }
    }
    return best;
}

DetectorOutput detect_ml_oracle(const FrameObservation& frame) {
    const auto u = static_cast<std::size_t>(frame.users());
    if (u > max_ml_users) {
        throw ParameterError("ml oracle: refusing exhaustive search over more than 16 users");
    }
    FitnessContext ctx(frame.r, frame.energies);
    DetectorOutput out = shaped_output(frame, false);
    for (Eigen::Index n = 0; n < frame.frames(); ++n) {
        const auto z = row_of(frame.z, n);
        ctx.set_observation(std::span<const cplx>(z));
        const auto b = row_of(frame.b_true, n);
        const auto x = ml_symbols(ctx, b);
        for (std::size_t i = 0; i < u; ++i) {
            out.x_hat(n, static_cast<Eigen::Index>(i)) = x[i];
        }
        out.evals_used += std::uint64_t{1} << u;
    }
    return out;
}

const std::vector<std::string>& detector_names() {
    static const std::vector<std::string> names{"ma", "std-ga", "mf", "decorrelator", "mmse",
                                                "ml-oracle"};
    return names;
}

bool is_detector(const std::string& name) {
    const auto& names = detector_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

bool is_blind(const std::string& name) { return name == "ma" || name == "std-ga"; }

DetectorFn detector_by_name(const std::string& name) {
    if (name == "ma") {
        return [](const FrameObservation& f, const DetectorSettings& s, Rng& rng) {
            return detect_ma(f, s.ma, rng);
        };
    }
    if (name == "std-ga") {
        return [](const FrameObservation& f, const DetectorSettings& s, Rng& rng) {
            return detect_std_ga(f, s.std_ga, rng);
        };
    }
    if (name == "mf") {
        return [](const FrameObservation& f, const DetectorSettings&, Rng&) { return detect_mf(f); };
    }
    if (name == "decorrelator") {
        return [](const FrameObservation& f, const DetectorSettings&, Rng&) {
            return detect_decorrelator(f);
        };
    }
    if (name == "mmse") {
        return [](const FrameObservation& f, const DetectorSettings&, Rng&) {
            return detect_mmse(f);
        };
    }
    if (name == "ml-oracle") {
        return [](const FrameObservation& f, const DetectorSettings&, Rng&) {
            return detect_ml_oracle(f);
        };
    }
    throw ParameterError("unknown detector '" + name + "'");
}

}  // namespace memud
