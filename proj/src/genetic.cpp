#include "memud/genetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace memud {

std::uint64_t GAConfig::budget_for(std::size_t population, std::size_t generations, double p_m,
                                   double p_c) {
    const double evals = (1.0 + p_c + p_m) * static_cast<double>(population) *
                         static_cast<double>(generations);
    return static_cast<std::uint64_t>(std::llround(evals));
}

std::size_t GAConfig::elite_count() const {
    const auto n = static_cast<std::size_t>(std::lround(elite_fraction * static_cast<double>(population)));
    return std::clamp<std::size_t>(n, 2, population);
}

void GAConfig::validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (population < 4) {
        throw ParameterError("GA population must be at least 4");
    }
    if (eval_budget < population) {
        throw ParameterError("GA evaluation budget must cover the initial population");
    }
    if (!in_unit(p_m_min) || !in_unit(p_m_max) || !in_unit(p_c_min) || !in_unit(p_c_max) ||
        p_m_min > p_m_max || p_c_min > p_c_max) {
        throw ParameterError("GA probability ranges must be ordered subsets of [0, 1]");
    }
    if (!in_unit(p_m0) || !in_unit(p_c0)) {
        throw ParameterError("GA initial probabilities must lie in [0, 1]");
    }
    if (!(sigma_mut >= 0.0) || !(warm_sigma >= 0.0)) {
        throw ParameterError("GA perturbation std must be non-negative");
    }
    if (!(elite_fraction >= 0.0 && elite_fraction < 1.0) || !in_unit(elite_mut_factor)) {
        throw ParameterError("GA elite parameters out of range");
    }
}

std::vector<double> Population::fitness_values() const {
    std::vector<double> f(members.size());
    std::transform(members.begin(), members.end(), f.begin(), [](const Chromosome& c) {
        return c.cached_fitness().value_or(std::numeric_limits<double>::quiet_NaN());
    });
    return f;
}

namespace {

void sort_members(std::vector<Chromosome>& members) {
    std::stable_sort(members.begin(), members.end(), [](const Chromosome& a, const Chromosome& b) {
        return *a.cached_fitness() > *b.cached_fitness();
    });
}

}  // namespace

Population init_population(const GAConfig& cfg, FitnessContext& ctx,
                           std::optional<std::span<const cplx>> warm_b, Rng& rng) {
    const std::size_t u = ctx.users();
    if (warm_b && warm_b->size() != u) {
        throw ParameterError("warm-start channel has the wrong number of users");
    }
    Population pop;
    pop.p_m = cfg.p_m0;
    pop.p_c = cfg.p_c0;
    pop.members.reserve(cfg.population);
    for (std::size_t k = 0; k < cfg.population; ++k) {
        Chromosome c(u);
        for (std::size_t i = 0; i < u; ++i) {
            const cplx b = warm_b ? (*warm_b)[i] + (cfg.warm_sigma > 0.0
                                                        ? complex_gaussian(rng, cfg.warm_sigma)
                                                        : cplx{})
                                  : complex_gaussian(rng, std::sqrt(0.5));
            c.set_channel(i, b);
        }
        for (std::size_t i = 0; i < u; ++i) {
            c.set_symbol(i, random_symbol(rng));
        }
        fitness(ctx, c);
        pop.members.push_back(std::move(c));
    }
    sort_members(pop.members);
    return pop;
}

std::vector<double> shifted_fitness(std::span<const double> fitness) {
    if (fitness.empty()) {
        return {};
    }
    const auto [lo, hi] = std::minmax_element(fitness.begin(), fitness.end());
    const double eps = 1e-9 * (*hi - *lo + 1.0);
    std::vector<double> out(fitness.size());
    std::transform(fitness.begin(), fitness.end(), out.begin(),
                   [&](double f) { return f - *lo + eps; });
    return out;
}

std::size_t roulette_select(std::span<const double> weights, Rng& rng) {
    if (weights.empty()) {
        throw ParameterError("roulette_select on an empty population");
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) {
        return static_cast<std::size_t>(rng() % weights.size());
    }
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (target < acc) {
            return i;
        }
    }
    // Rounding left target at the very top; return the last positive weight.
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) {
            return i;
        }
    }
    return weights.size() - 1;
}

std::size_t roulette_select(const Population& pop, Rng& rng) {
    const auto w = shifted_fitness(pop.fitness_values());
    return roulette_select(w, rng);
}

double mutation_flip_probability(double sigma) {
    if (!(sigma > 0.0)) {
        return 0.0;
    }
    return 0.5 * std::erfc(1.0 / (sigma * std::sqrt(2.0)));
}

Chromosome mutate(const Chromosome& c, double sigma, Rng& rng) {
    Chromosome child = c;
    child.invalidate();
    const double q = mutation_flip_probability(sigma);
    if (q <= 0.0) {
        return child;
    }
    // Gaps between flipped genes are geometric with success probability q.
    std::geometric_distribution<std::size_t> gap(q);
    for (std::size_t pos = gap(rng); pos < child.size(); pos += 1 + gap(rng)) {
        child.flip(pos);
    }
    return child;
}

std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& a, const Chromosome& b,
                                               std::size_t cut) {
    if (a.size() != b.size()) {
        throw ParameterError("crossover parents differ in length");
    }
    cut = std::min(cut, a.size());
    Chromosome first = a;
    Chromosome second = b;
    for (std::size_t pos = cut; pos < a.size(); ++pos) {
        first.set_gene(pos, b.gene(pos));
        second.set_gene(pos, a.gene(pos));
    }
    first.invalidate();
    second.invalidate();
    return {std::move(first), std::move(second)};
}

std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, Rng& rng) {
    if (a.size() < 2) {
        return crossover_at(a, b, 0);
    }
    std::uniform_int_distribution<std::size_t> cut(1, a.size() - 1);
    return crossover_at(a, b, cut(rng));
}

double weight_entropy(std::span<const double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) {
        return std::log(static_cast<double>(weights.size()));
    }
    double h = 0.0;
    for (double s : weights) {
        const double p = s / total;
        if (p > 0.0) {
            h -= p * std::log(p);
        }
    }
    return h;
}

double fitness_entropy(std::span<const double> fitness) {
    const auto shifted = shifted_fitness(fitness);
    return weight_entropy(shifted);
}

double population_entropy(const Population& pop) { return fitness_entropy(pop.fitness_values()); }

Rates adapt_rates(const GAConfig& cfg, double entropy, std::size_t population) {
    double h = population > 1 ? entropy / std::log(static_cast<double>(population)) : 0.0;
    h = std::clamp(h, 0.0, 1.0);
    if (cfg.invert_entropy_control) {
        h = 1.0 - h;
    }
    Rates r;
    r.p_m = std::clamp(cfg.p_m_min + h * (cfg.p_m_max - cfg.p_m_min), cfg.p_m_min, cfg.p_m_max);
    r.p_c = std::clamp(cfg.p_c_max - h * (cfg.p_c_max - cfg.p_c_min), cfg.p_c_min, cfg.p_c_max);
    return r;
}

Rates adapt_rates(const GAConfig& cfg, Population& pop) {
    const Rates r = adapt_rates(cfg, population_entropy(pop), pop.members.size());
    pop.p_m = r.p_m;
    pop.p_c = r.p_c;
    return r;
}

GAResult run_ga(const GAConfig& cfg, FitnessContext& ctx,
                std::optional<std::span<const cplx>> warm_b, Rng& rng, bool record_trace) {
    cfg.validate();
    const std::uint64_t start = ctx.evaluations();
    auto spent = [&] { return ctx.evaluations() - start; };
    auto affordable = [&] { return spent() < cfg.eval_budget; };

    GAResult result;
    Population pop = init_population(cfg, ctx, warm_b, rng);
    const std::size_t n_p = pop.members.size();
    const std::size_t n_elite = cfg.elite_count();

    auto trace = [&](const Population& p, double entropy) {
        if (record_trace) {
            result.trace.push_back({p.generation, *p.best().cached_fitness(), entropy, p.p_m, p.p_c,
                                    spent()});
        }
    };
    trace(pop, population_entropy(pop));

    std::vector<Chromosome> offspring;
    std::vector<std::size_t> elite_order(n_elite);
    std::vector<double> cumulative(n_p);

    while (affordable()) {
        ++pop.generation;
        const auto fit = pop.fitness_values();
        const auto weights = shifted_fitness(fit);
        const double entropy = fitness_entropy(fit);
        if (cfg.adaptive) {
            const Rates r = adapt_rates(cfg, entropy, n_p);
            pop.p_m = r.p_m;
            pop.p_c = r.p_c;
        }
        std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
        auto select = [&]() -> const Chromosome& {
            const double target = uniform01(rng) * cumulative.back();
            auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
            const auto idx = std::min<std::size_t>(
                static_cast<std::size_t>(it - cumulative.begin()), n_p - 1);
            return pop.members[idx];
        };
        offspring.clear();
        auto admit = [&](Chromosome&& child) {
            if (!affordable()) {
                return;
            }
            fitness(ctx, child);
            offspring.push_back(std::move(child));
        };

        // Elite: members [0, n_elite) are the fittest. A random half of them
        // may contribute a lightly mutated copy; the originals stay.
        std::iota(elite_order.begin(), elite_order.end(), std::size_t{0});
        std::shuffle(elite_order.begin(), elite_order.end(), rng);
        const double p_elite = cfg.elite_mut_factor * pop.p_m;
        for (std::size_t k = 0; k < n_elite / 2; ++k) {
            if (uniform01(rng) < p_elite) {
                admit(mutate(pop.members[elite_order[k]], cfg.sigma_mut, rng));
            }
        }

        // Remaining slots are filled by roulette-selected parents. A slot
        // whose parent is left untouched by both operators would only
        // duplicate an existing member, so it is not materialized.
        const std::size_t slots = n_p - n_elite;
        for (std::size_t s = 0; s < slots; s += 2) {
            const bool pair = s + 1 < slots;
            std::optional<Chromosome> child[2];
            if (pair && uniform01(rng) < pop.p_c) {
                auto [c1, c2] = crossover(select(), select(), rng);
                child[0] = std::move(c1);
                child[1] = std::move(c2);
            }
            for (int k = 0; k < (pair ? 2 : 1); ++k) {
                if (uniform01(rng) < pop.p_m) {
                    child[k] = mutate(child[k] ? *child[k] : select(), cfg.sigma_mut, rng);
                }
                if (child[k]) {
                    admit(std::move(*child[k]));
                }
            }
        }

        // Parents and descendants together; keep the n_p fittest. Parents
        // come first so they win ties.
        for (auto& c : offspring) {
            pop.members.push_back(std::move(c));
        }
        sort_members(pop.members);
        pop.members.resize(n_p);
        trace(pop, entropy);
    }

    result.evaluations = spent();
    result.generations = pop.generation;
    result.best = pop.best();
    result.population = std::move(pop);
    return result;
}

void write_trace_csv(std::span<const GenerationTrace> trace, const std::filesystem::path& path,
                     bool append) {
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    if (!append) {
        out << "generation,best_fitness,entropy,p_m,p_c,evals\n";
    }
    char buf[200];
    for (const auto& t : trace) {
        std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g,%.12g,%.12g,%llu\n", t.generation,
                      t.best_fitness, t.entropy, t.p_m, t.p_c,
                      static_cast<unsigned long long>(t.evals));
        out << buf;
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace memud
