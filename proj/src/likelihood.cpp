#include "memud/likelihood.hpp"

#include <algorithm>
#include <cmath>

namespace memud {

Quantizer::Code Quantizer::encode(double v) {
    const double scaled = std::round(std::fabs(v) / step);
    const auto magnitude =
        static_cast<std::uint16_t>(std::min<double>(scaled, static_cast<double>(max_magnitude)));
    return {v < 0.0 && magnitude != 0, magnitude};
}

double Quantizer::decode(Code c) {
    const double value = c.magnitude * step;
    return c.negative ? -value : value;
}

namespace {

constexpr std::size_t component_genes = 1 + Quantizer::magnitude_bits;

Quantizer::Code read_component(std::span<const Symbol> genes, std::size_t offset) {
    Quantizer::Code code;
    code.negative = genes[offset] > 0;
    std::uint16_t m = 0;
    for (std::size_t k = 0; k < Quantizer::magnitude_bits; ++k) {
        m = static_cast<std::uint16_t>((m << 1) | (genes[offset + 1 + k] > 0 ? 1u : 0u));
    }
    code.magnitude = m;
    return code;
}

void write_component(std::vector<Symbol>& genes, std::size_t offset, Quantizer::Code code) {
    genes[offset] = code.negative ? Symbol{1} : Symbol{-1};
    for (std::size_t k = 0; k < Quantizer::magnitude_bits; ++k) {
        const auto bit = (code.magnitude >> (Quantizer::magnitude_bits - 1 - k)) & 1u;
        genes[offset + 1 + k] = bit ? Symbol{1} : Symbol{-1};
    }
}

}  // namespace

Chromosome::Chromosome(std::size_t users)
    : users_(users), genes_(users * genes_per_user, Symbol{-1}) {
    for (std::size_t i = 0; i < users; ++i) {
        genes_[symbol_offset() + i] = Symbol{1};
    }
}

std::size_t Chromosome::user_of(std::size_t pos) const {
    return is_symbol_position(pos) ? pos - symbol_offset() : pos / channel_genes_per_user;
}

void Chromosome::set_gene(std::size_t pos, Symbol g) {
    genes_[pos] = g < 0 ? Symbol{-1} : Symbol{1};
    fitness_.reset();
}

void Chromosome::flip(std::size_t pos) {
    genes_[pos] = static_cast<Symbol>(-genes_[pos]);
    fitness_.reset();
}

cplx Chromosome::channel(std::size_t user) const {
    const std::size_t base = user * channel_genes_per_user;
    return {Quantizer::decode(read_component(genes_, base)),
            Quantizer::decode(read_component(genes_, base + component_genes))};
}

void Chromosome::set_channel(std::size_t user, cplx b) {
    const std::size_t base = user * channel_genes_per_user;
    write_component(genes_, base, Quantizer::encode(b.real()));
    write_component(genes_, base + component_genes, Quantizer::encode(b.imag()));
    fitness_.reset();
}

void Chromosome::set_symbol(std::size_t user, Symbol x) {
    genes_[symbol_offset() + user] = x < 0 ? Symbol{-1} : Symbol{1};
    fitness_.reset();
}

std::vector<cplx> Chromosome::channels() const {
    std::vector<cplx> b(users_);
    for (std::size_t i = 0; i < users_; ++i) {
        b[i] = channel(i);
    }
    return b;
}

std::vector<Symbol> Chromosome::symbols() const {
    return {genes_.begin() + static_cast<std::ptrdiff_t>(symbol_offset()), genes_.end()};
}

Chromosome encode(std::span<const cplx> b, std::span<const Symbol> x) {
    if (b.size() != x.size()) {
        throw ParameterError("encode: channel and symbol vectors differ in length");
    }
    Chromosome c(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        c.set_channel(i, b[i]);
        c.set_symbol(i, x[i]);
    }
    return c;
}

std::pair<std::vector<cplx>, std::vector<Symbol>> decode(const Chromosome& c) {
    return {c.channels(), c.symbols()};
}

FitnessContext::FitnessContext(const RealMatrix& r, std::span<const double> energies)
    : r_(r), sqrt_energy_(energies.size()), z_(energies.size()) {
    if (r.rows() != r.cols() || static_cast<std::size_t>(r.rows()) != energies.size()) {
        throw ParameterError("fitness context: R and energies disagree on user count");
    }
    std::transform(energies.begin(), energies.end(), sqrt_energy_.begin(),
                   [](double e) { return std::sqrt(e); });
}

void FitnessContext::set_observation(std::span<const cplx> z) {
    if (z.size() != users()) {
        throw ParameterError("fitness context: observation has wrong length");
    }
    std::copy(z.begin(), z.end(), z_.begin());
}

void FitnessContext::set_observation(const ComplexVector& z) {
    set_observation(std::span<const cplx>(z.data(), static_cast<std::size_t>(z.size())));
}

double likelihood_of_amplitudes(const FitnessContext& ctx, std::span<const cplx> a) {
    const auto& r = ctx.r();
    const auto z = ctx.z();
    const std::size_t u = a.size();
    double linear = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < u; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        linear += a[i].real() * z[i].real() + a[i].imag() * z[i].imag();
        quad += r(ii, ii) * std::norm(a[i]);
        double cross = 0.0;
        for (std::size_t j = i + 1; j < u; ++j) {
            cross += r(ii, static_cast<Eigen::Index>(j)) *
                     (a[i].real() * a[j].real() + a[i].imag() * a[j].imag());
        }
        quad += 2.0 * cross;
    }
    return 2.0 * linear - quad;
}

double log_likelihood(FitnessContext& ctx, std::span<const cplx> b, std::span<const Symbol> x) {
    const std::size_t u = ctx.users();
    if (b.size() != u || x.size() != u) {
        throw ParameterError("log_likelihood: dimension mismatch");
    }
    thread_local std::vector<cplx> a;
    a.resize(u);
    const auto se = ctx.sqrt_energy();
    for (std::size_t i = 0; i < u; ++i) {
        a[i] = se[i] * static_cast<double>(x[i]) * b[i];
    }
    ctx.counter().add();
    return likelihood_of_amplitudes(ctx, a);
}

double fitness(FitnessContext& ctx, Chromosome& c) {
    if (auto cached = c.cached_fitness()) {
        return *cached;
    }
    const std::size_t u = c.users();
    if (u != ctx.users()) {
        throw ParameterError("fitness: chromosome and context disagree on user count");
    }
    thread_local std::vector<cplx> a;
    a.resize(u);
    const auto genes = c.genes();
    const auto se = ctx.sqrt_energy();
    for (std::size_t i = 0; i < u; ++i) {
        const std::size_t base = i * Chromosome::channel_genes_per_user;
        const cplx b{Quantizer::decode(read_component(genes, base)),
                     Quantizer::decode(read_component(genes, base + component_genes))};
        a[i] = se[i] * static_cast<double>(genes[c.symbol_offset() + i]) * b;
    }
    ctx.counter().add();
    const double value = likelihood_of_amplitudes(ctx, a);
    c.set_cached_fitness(value);
    return value;
}

}  // namespace memud
