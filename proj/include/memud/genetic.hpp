#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "memud/likelihood.hpp"
#include "memud/rng.hpp"

namespace memud {

struct GAConfig {
    std::size_t population = 60;
    // Termination: stop once this many evaluations (initial population
    // included) have been spent. See budget_for().
    std::uint64_t eval_budget = 15'600;
    double p_m0 = 0.03;
    double p_c0 = 0.01;
    double p_m_min = 0.02;
    double p_m_max = 0.10;
    double p_c_min = 0.002;
    double p_c_max = 0.02;
    // Per-gene std of the perturbation in NEW = sign(CHR + N(0, sigma)).
    double sigma_mut = 0.4;
    // Std (per real component) of the spread around a warm-start channel.
    double warm_sigma = 0.05;
    double elite_fraction = 0.1;
    double elite_mut_factor = 0.2;
    // Entropy-driven adaptation of p_m and p_c. Off for the standard GA.
    bool adaptive = true;
    // Flips the direction of the entropy control law.
    bool invert_entropy_control = false;

    /// (1 + p_c + p_m) * n_p * n_g, rounded to the nearest evaluation.
    static std::uint64_t budget_for(std::size_t population, std::size_t generations, double p_m,
                                    double p_c);

    std::size_t elite_count() const;
    void validate() const;
};

struct Population {
    // Kept sorted by fitness, best first; equal fitness keeps older members first.
    std::vector<Chromosome> members;
    double p_m = 0.0;
    double p_c = 0.0;
    std::size_t generation = 0;

    std::vector<double> fitness_values() const;
    const Chromosome& best() const { return members.front(); }
};

/// Random symbols; channels from warm_b plus CN spread, or from the unit-power
/// Rayleigh prior when no warm start is given. All members are evaluated.
Population init_population(const GAConfig& cfg, FitnessContext& ctx,
                           std::optional<std::span<const cplx>> warm_b, Rng& rng);

/// fitness - min + eps with eps = 1e-9 * (max - min + 1).
std::vector<double> shifted_fitness(std::span<const double> fitness);

/// Index drawn with probability weights[i] / sum(weights); uniform when every
/// weight is zero.
std::size_t roulette_select(std::span<const double> weights, Rng& rng);
std::size_t roulette_select(const Population& pop, Rng& rng);

/// NEW_k = sign(CHR_k + N(0, sigma)) on every gene, zero resolving to +1.
/// A +-1 gene flips exactly when the noise crosses -/+1, which happens with
/// probability Phi(-1/sigma) independently per gene; flips are sampled
/// directly from that law.
Chromosome mutate(const Chromosome& c, double sigma, Rng& rng);

/// Probability that mutate() flips a given gene.
double mutation_flip_probability(double sigma);

/// Single-point crossover: child one takes genes [0, cut) from `a` and the
/// rest from `b`; child two is the complement.
std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& a, const Chromosome& b,
                                               std::size_t cut);
/// Cut drawn uniformly from 1..K-1.
std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, Rng& rng);

/// Shannon entropy (natural log) of weights / sum(weights); ln n when all are zero.
double weight_entropy(std::span<const double> weights);
/// weight_entropy of the shifted fitness.
double fitness_entropy(std::span<const double> fitness);
double population_entropy(const Population& pop);

struct Rates {
    double p_m = 0.0;
    double p_c = 0.0;
};

/// Linear map from normalized entropy H / ln(n_p) onto the configured ranges:
/// high entropy raises p_m and lowers p_c.
Rates adapt_rates(const GAConfig& cfg, double entropy, std::size_t population);
Rates adapt_rates(const GAConfig& cfg, Population& pop);

struct GenerationTrace {
    std::size_t generation = 0;
    double best_fitness = 0.0;
    double entropy = 0.0;
    double p_m = 0.0;
    double p_c = 0.0;
    std::uint64_t evals = 0;
};

struct GAResult {
    Chromosome best;
    Population population;
    std::uint64_t evaluations = 0;
    std::size_t generations = 0;
    std::vector<GenerationTrace> trace;
};

GAResult run_ga(const GAConfig& cfg, FitnessContext& ctx,
                std::optional<std::span<const cplx>> warm_b, Rng& rng, bool record_trace = false);

/// generation,best_fitness,entropy,p_m,p_c,evals
void write_trace_csv(std::span<const GenerationTrace> trace, const std::filesystem::path& path,
                     bool append = false);

}  // namespace memud
