#include "memud/local_search.hpp"

#include <cmath>
#include <limits>

namespace memud {

void LkConfig::validate() const {
    if (max_passes < 1) {
        throw ParameterError("local search needs at least one pass");
    }
    if (!(rel_tolerance >= 0.0)) {
        throw ParameterError("local search tolerance must be non-negative");
    }
}

std::uint64_t lk_pass_cost(std::size_t genes) {
    const auto k = static_cast<std::uint64_t>(genes);
    return k * (k + 1) / 2;
}

namespace {

constexpr std::size_t component_genes = 1 + Quantizer::magnitude_bits;

std::vector<cplx> amplitudes(const FitnessContext& ctx, const Chromosome& c) {
    const auto se = ctx.sqrt_energy();
    std::vector<cplx> a(c.users());
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = se[i] * static_cast<double>(c.symbol(i)) * c.channel(i);
    }
    return a;
}

double metric(const FitnessContext& ctx, const Chromosome& c) {
    return likelihood_of_amplitudes(ctx, amplitudes(ctx, c));
}

// Decoded view of a chromosome that supports O(1) flip deltas and O(U)
// flip updates. s = R a is kept current.
class FlipState {
public:
    FlipState(const FitnessContext& ctx, const Chromosome& c)
        : ctx_(ctx), c_(c), codes_(2 * c.users()), a_(amplitudes(ctx, c)), s_(c.users()) {
        const auto genes = c.genes();
        for (std::size_t i = 0; i < c.users(); ++i) {
            for (std::size_t part = 0; part < 2; ++part) {
                const std::size_t base = i * Chromosome::channel_genes_per_user + part * component_genes;
                Quantizer::Code code;
                code.negative = genes[base] > 0;
                for (std::size_t k = 0; k < Quantizer::magnitude_bits; ++k) {
                    code.magnitude = static_cast<std::uint16_t>((code.magnitude << 1) |
                                                                (genes[base + 1 + k] > 0 ? 1u : 0u));
                }
                codes_[2 * i + part] = code;
            }
        }
        const auto& r = ctx.r();
        for (std::size_t i = 0; i < a_.size(); ++i) {
            cplx acc{};
            for (std::size_t j = 0; j < a_.size(); ++j) {
                acc += r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * a_[j];
            }
            s_[i] = acc;
        }
    }

    const Chromosome& chromosome() const { return c_; }

    // Change of a_{user} caused by flipping pos.
    cplx delta(std::size_t pos) const {
        const std::size_t user = c_.user_of(pos);
        if (c_.is_symbol_position(pos)) {
            return -2.0 * a_[user];
        }
        const std::size_t within = pos % Chromosome::channel_genes_per_user;
        const std::size_t part = within / component_genes;
        const std::size_t bit = within % component_genes;
        const Quantizer::Code old = codes_[2 * user + part];
        const double before = Quantizer::decode(old);
        const double after = Quantizer::decode(flipped_code(old, bit));
        const double scale = ctx_.sqrt_energy()[user] * static_cast<double>(c_.symbol(user));
        const double d = scale * (after - before);
        return part == 0 ? cplx{d, 0.0} : cplx{0.0, d};
    }

    double incremental_gain(std::size_t pos) const {
        const std::size_t user = c_.user_of(pos);
        const cplx d = delta(pos);
        const auto ui = static_cast<Eigen::Index>(user);
        const cplx resid = ctx_.z()[user] - s_[user];
        return 2.0 * (d.real() * resid.real() + d.imag() * resid.imag()) -
               ctx_.r()(ui, ui) * std::norm(d);
    }

    double full_gain(std::size_t pos) const {
        std::vector<cplx> a = a_;
        a[c_.user_of(pos)] += delta(pos);
        return likelihood_of_amplitudes(ctx_, a) - likelihood_of_amplitudes(ctx_, a_);
    }

    void flip(std::size_t pos) {
        const std::size_t user = c_.user_of(pos);
        const cplx d = delta(pos);
        if (!c_.is_symbol_position(pos)) {
            const std::size_t within = pos % Chromosome::channel_genes_per_user;
            auto& code = codes_[2 * user + within / component_genes];
            code = flipped_code(code, within % component_genes);
        }
        c_.flip(pos);
        a_[user] += d;
        const auto& r = ctx_.r();
        for (std::size_t j = 0; j < s_.size(); ++j) {
            s_[j] += r(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(user)) * d;
        }
    }

private:
    static Quantizer::Code flipped_code(Quantizer::Code code, std::size_t bit) {
        if (bit == 0) {
            code.negative = !code.negative;
        } else {
            code.magnitude = static_cast<std::uint16_t>(
                code.magnitude ^ (1u << (Quantizer::magnitude_bits - bit)));
        }
        return code;
    }

    const FitnessContext& ctx_;
    Chromosome c_;
    std::vector<Quantizer::Code> codes_;  // [2*user + part]
    std::vector<cplx> a_;
    std::vector<cplx> s_;
};

}  // namespace

double bit_gain(FitnessContext& ctx, const Chromosome& c, std::size_t pos) {
    if (pos >= c.size()) {
        throw ParameterError("bit_gain: position out of range");
    }
    Chromosome flipped = c;
    flipped.flip(pos);
    ctx.counter().add();
    return metric(ctx, flipped) - metric(ctx, c);
}

LkPassResult lk_pass(FitnessContext& ctx, const Chromosome& c, const LkConfig& cfg) {
    if (c.users() != ctx.users()) {
        throw ParameterError("lk_pass: chromosome and context disagree on user count");
    }
    const std::size_t k = c.size();
    FlipState state(ctx, c);
    std::vector<char> used(k, 0);

    LkPassResult result;
    result.order.reserve(k);
    double cumulative = 0.0;
    double best = 0.0;
    std::size_t best_len = 0;
    for (std::size_t step = 0; step < k; ++step) {
        std::size_t arg = k;
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t pos = 0; pos < k; ++pos) {
            if (used[pos]) {
                continue;
            }
            const double g = cfg.mode == GainMode::incremental ? state.incremental_gain(pos)
                                                               : state.full_gain(pos);
            if (g > top) {
                top = g;
                arg = pos;
            }
        }
        used[arg] = 1;
        state.flip(arg);
        result.order.push_back(arg);
        cumulative += top;
        if (cumulative > best) {
            best = cumulative;
            best_len = step + 1;
        }
    }
    result.evaluations = lk_pass_cost(k);
    ctx.counter().add(result.evaluations);

    const double before = metric(ctx, c);
    if (best_len > 0 && best > cfg.rel_tolerance * (1.0 + std::fabs(before))) {
        Chromosome out = c;
        for (std::size_t t = 0; t < best_len; ++t) {
            out.flip(result.order[t]);
        }
        const double after = metric(ctx, out);
        if (after > before) {
            out.set_cached_fitness(after);
            result.chromosome = std::move(out);
            result.gain = after - before;
            result.kept = best_len;
            return result;
        }
    }
    result.chromosome = c;
    result.chromosome.set_cached_fitness(before);
    return result;
}

RefineResult refine(FitnessContext& ctx, const Chromosome& c, const LkConfig& cfg) {
    cfg.validate();
    RefineResult result;
    result.chromosome = c;
    result.fitness_history.push_back(metric(ctx, c));
    while (result.passes < cfg.max_passes) {
        LkPassResult pass = lk_pass(ctx, result.chromosome, cfg);
        ++result.passes;
        result.evaluations += pass.evaluations;
        if (pass.kept == 0) {
            result.converged = true;
            break;
        }
        result.chromosome = std::move(pass.chromosome);
        result.fitness_history.push_back(*result.chromosome.cached_fitness());
    }
    if (!result.chromosome.cached_fitness()) {
        result.chromosome.set_cached_fitness(result.fitness_history.back());
    }
    return result;
}

}  // namespace memud
