#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "memud/types.hpp"

namespace memud {

/// Sign-magnitude quantizer for one real component of a fading estimate:
/// one sign bit and ten magnitude bits, value = sign * m / 512.
struct Quantizer {
    static constexpr int magnitude_bits = 10;
    static constexpr std::uint16_t max_magnitude = (1u << magnitude_bits) - 1;  // 1023
    static constexpr double step = 1.0 / 512.0;
    static constexpr double max_value = max_magnitude * step;  // 1.998046875

    struct Code {
        bool negative = false;
        std::uint16_t magnitude = 0;
        bool operator==(const Code&) const = default;
    };

    /// Round to nearest, saturating at +-max_value. Zero is always encoded +0.
    static Code encode(double v);
    static double decode(Code c);
};

/// Hybrid chromosome: for every user 22 channel genes (real part sign,
/// 10 magnitude bits MSB first, then the same for the imaginary part)
/// followed by one bipolar symbol gene per user. Genes are stored bipolar;
/// a gene of +1 means bit 1. For sign genes bit 1 means negative.
class Chromosome {
public:
    static constexpr std::size_t channel_genes_per_user = 2 * (1 + Quantizer::magnitude_bits);  // 22
    static constexpr std::size_t genes_per_user = channel_genes_per_user + 1;                   // 23

    Chromosome() = default;
    /// Zero channel, all symbols +1.
    explicit Chromosome(std::size_t users);

    std::size_t users() const { return users_; }
    std::size_t size() const { return genes_.size(); }
    std::size_t symbol_offset() const { return users_ * channel_genes_per_user; }
    bool is_symbol_position(std::size_t pos) const { return pos >= symbol_offset(); }
    /// User owning a gene position.
    std::size_t user_of(std::size_t pos) const;

    std::span<const Symbol> genes() const { return genes_; }
    Symbol gene(std::size_t pos) const { return genes_[pos]; }
    void set_gene(std::size_t pos, Symbol g);
    void flip(std::size_t pos);

    cplx channel(std::size_t user) const;
    Symbol symbol(std::size_t user) const { return genes_[symbol_offset() + user]; }
    void set_channel(std::size_t user, cplx b);
    void set_symbol(std::size_t user, Symbol x);

    std::vector<cplx> channels() const;
    std::vector<Symbol> symbols() const;

    std::optional<double> cached_fitness() const { return fitness_; }
    void set_cached_fitness(double f) { fitness_ = f; }
    void invalidate() { fitness_.reset(); }

    /// Gene equality; the cache is ignored.
    bool same_genes(const Chromosome& other) const { return genes_ == other.genes_; }

private:
    std::size_t users_ = 0;
    std::vector<Symbol> genes_;
    std::optional<double> fitness_;
};

Chromosome encode(std::span<const cplx> b, std::span<const Symbol> x);
std::pair<std::vector<cplx>, std::vector<Symbol>> decode(const Chromosome& c);

/// Monotone count of likelihood evaluations. Safe to bump from several threads.
class EvalCounter {
public:
    void add(std::uint64_t n = 1) { count_.fetch_add(n, std::memory_order_relaxed); }
    std::uint64_t value() const { return count_.load(std::memory_order_relaxed); }

private:
    std::atomic<std::uint64_t> count_{0};
};

/// Inputs of the joint metric for one symbol period.
class FitnessContext {
public:
    FitnessContext(const RealMatrix& r, std::span<const double> energies);

    void set_observation(std::span<const cplx> z);
    void set_observation(const ComplexVector& z);

    std::size_t users() const { return sqrt_energy_.size(); }
    std::span<const cplx> z() const { return z_; }
    const RealMatrix& r() const { return r_; }
    std::span<const double> sqrt_energy() const { return sqrt_energy_; }

    EvalCounter& counter() { return counter_; }
    std::uint64_t evaluations() const { return counter_.value(); }

private:
    RealMatrix r_;
    std::vector<double> sqrt_energy_;
    std::vector<cplx> z_;
    EvalCounter counter_;
};

/// Evaluates the metric for amplitudes a_i = sqrt(E_i) b_i x_i without
/// touching the counter:  2 Re{a^H z} - a^H R a.
double likelihood_of_amplitudes(const FitnessContext& ctx, std::span<const cplx> a);

/// 2 Re{x^T E B^* z} - x^T E B R B^* E x. Counts one evaluation.
double log_likelihood(FitnessContext& ctx, std::span<const cplx> b, std::span<const Symbol> x);

/// Cached metric of a chromosome; only cache misses are counted.
double fitness(FitnessContext& ctx, Chromosome& c);

}  // namespace memud
