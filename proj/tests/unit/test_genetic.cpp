#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>

#include "memud/detectors.hpp"
#include "memud/genetic.hpp"
#include "memud/spreading.hpp"

using namespace memud;

namespace {

Chromosome random_chromosome(std::size_t users, Rng& rng) {
    Chromosome c(users);
    for (std::size_t g = 0; g < c.size(); ++g) {
        c.set_gene(g, random_symbol(rng));
    }
    return c;
}

struct Instance {
    std::unique_ptr<FitnessContext> ctx;
    std::vector<cplx> b;
    std::vector<Symbol> x;
};

// Noiseless observation from Gold codes, unit energies.
Instance noiseless_instance(std::size_t users, std::uint64_t seed) {
    const auto set = generate_gold_set(5, users, seed);
    Rng rng(seed);
    std::vector<double> e(users, 1.0);
    Instance inst{std::make_unique<FitnessContext>(set.crosscorr, e), {}, {}};
    ComplexVector a(static_cast<Eigen::Index>(users));
    for (std::size_t i = 0; i < users; ++i) {
        inst.b.push_back(Quantizer::decode(Quantizer::encode(0.3 + 0.8 * uniform01(rng))) +
                         cplx(0, 0.25));
        inst.x.push_back(random_symbol(rng));
        a(Eigen::Index(i)) = inst.b[i] * double(inst.x[i]);
    }
    const ComplexVector z = set.crosscorr * a;
    inst.ctx->set_observation(z);
    return inst;
}

}  // namespace

TEST_CASE("budget formula and elite size") {
    CHECK(GAConfig::budget_for(60, 250, 0.03, 0.01) == 15600);
    CHECK(GAConfig::budget_for(300, 500, 0.05, 0.01) == 159000);
    GAConfig cfg;
    cfg.population = 60;
    CHECK(cfg.elite_count() == 6);
    cfg.population = 5;
    CHECK(cfg.elite_count() == 2);
}

TEST_CASE("config validation") {
    GAConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.population = 2;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = GAConfig{};
    cfg.eval_budget = cfg.population - 1;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = GAConfig{};
    cfg.p_m_min = 0.5;
    cfg.p_m_max = 0.1;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = GAConfig{};
    cfg.sigma_mut = -1;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

TEST_CASE("roulette frequencies") {
    Rng rng(1);
    const int draws = 100000;
    SUBCASE("two members (3, 1)") {
        std::vector<double> w{3.0, 1.0};
        int first = 0;
        for (int k = 0; k < draws; ++k) {
            first += roulette_select(w, rng) == 0;
        }
        CHECK(double(first) / draws == doctest::Approx(0.75).epsilon(0.01 / 0.75));
    }
    SUBCASE("all equal is uniform") {
        const std::vector<double> fit(8, 2.5);
        const auto w = shifted_fitness(fit);
        std::vector<int> hits(8, 0);
        for (int k = 0; k < draws; ++k) {
            ++hits[roulette_select(w, rng)];
        }
        const double p = 1.0 / 8;
        const double sd = std::sqrt(p * (1 - p) / draws);
        for (int h : hits) {
            CHECK(std::abs(double(h) / draws - p) < 3 * sd);
        }
        std::vector<double> zeros(8, 0.0);
        std::fill(hits.begin(), hits.end(), 0);
        for (int k = 0; k < draws; ++k) {
            ++hits[roulette_select(zeros, rng)];
        }
        for (int h : hits) {
            CHECK(std::abs(double(h) / draws - p) < 3 * sd);
        }
    }
    SUBCASE("single dominant member") {
        std::vector<double> w{0.0, 0.0, 4.0, 0.0};
        for (int k = 0; k < 1000; ++k) {
            CHECK(roulette_select(w, rng) == 2);
        }
    }
}

TEST_CASE("shifted fitness is positive and order preserving") {
    std::vector<double> f{-3.0, 2.0, -3.0, 7.5};
    const auto s = shifted_fitness(f);
    for (double v : s) {
        CHECK(v > 0.0);
    }
    CHECK(s[1] - s[0] == doctest::Approx(5.0));
    CHECK(s[0] == s[2]);
    CHECK(s[3] > s[1]);
}

TEST_CASE("mutation flip law") {
    Rng rng(2);
    Chromosome parent(10);
    for (std::size_t g = 0; g < parent.size(); g += 2) {
        parent.flip(g);
    }
    SUBCASE("sigma zero is the identity") {
        for (int k = 0; k < 100; ++k) {
            CHECK(mutate(parent, 0.0, rng).same_genes(parent));
        }
    }
    auto flip_rate = [&](double sigma, std::size_t bits) {
        std::size_t flips = 0;
        std::size_t seen = 0;
        while (seen < bits) {
            const auto child = mutate(parent, sigma, rng);
            for (std::size_t g = 0; g < parent.size(); ++g) {
                flips += child.gene(g) != parent.gene(g);
            }
            seen += parent.size();
        }
        return double(flips) / double(seen);
    };
    SUBCASE("sigma = 1 flips with the Gaussian tail") {
        CHECK(mutation_flip_probability(1.0) == doctest::Approx(0.15865525393145707));
        CHECK(flip_rate(1.0, 100000) == doctest::Approx(0.1587).epsilon(0.005 / 0.1587));
    }
    SUBCASE("large sigma approaches a fair coin") {
        CHECK(flip_rate(1e6, 100000) == doctest::Approx(0.5).epsilon(0.02));
    }
    SUBCASE("mutants drop the cached fitness") {
        Chromosome c = parent;
        c.set_cached_fitness(1.0);
        CHECK_FALSE(mutate(c, 0.5, rng).cached_fitness().has_value());
    }
}

TEST_CASE("crossover properties") {
    Rng rng(3);
    const auto a = random_chromosome(3, rng);
    const auto b = random_chromosome(3, rng);
    const std::size_t k = a.size();
    SUBCASE("identical parents") {
        auto [c1, c2] = crossover(a, a, rng);
        CHECK(c1.same_genes(a));
        CHECK(c2.same_genes(a));
    }
    SUBCASE("boundary cuts copy the parents") {
        auto [c1, c2] = crossover_at(a, b, 0);
        CHECK(c1.same_genes(b));
        CHECK(c2.same_genes(a));
        auto [d1, d2] = crossover_at(a, b, k);
        CHECK(d1.same_genes(a));
        CHECK(d2.same_genes(b));
    }
    SUBCASE("children are complementary at every position") {
        for (int t = 0; t < 100; ++t) {
            auto [c1, c2] = crossover(a, b, rng);
            std::size_t cut = 0;
            while (cut < k && c1.gene(cut) == a.gene(cut) && c2.gene(cut) == b.gene(cut)) {
                ++cut;
            }
            for (std::size_t g = 0; g < k; ++g) {
                if (g < cut) {
                    CHECK(c1.gene(g) == a.gene(g));
                } else {
                    CHECK(c1.gene(g) == b.gene(g));
                    CHECK(c2.gene(g) == a.gene(g));
                }
            }
        }
    }
}

TEST_CASE("fitness entropy") {
    CHECK(weight_entropy(std::vector<double>{0.25, 0.75}) == doctest::Approx(0.5623351446));
    CHECK(weight_entropy(std::vector<double>{1.0, 0.0, 0.0}) == 0.0);
    CHECK(weight_entropy(std::vector<double>{0.0, 0.0, 0.0, 0.0}) ==
          doctest::Approx(std::log(4.0)));
    CHECK(fitness_entropy(std::vector<double>(6, -2.0)) == doctest::Approx(std::log(6.0)));

    Rng rng(4);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng() % 50;
        std::vector<double> f(n);
        for (auto& v : f) {
            v = gaussian(rng, 10.0);
        }
        const double h = fitness_entropy(f);
        CHECK(h >= 0.0);
        CHECK(h <= std::log(double(n)) + 1e-12);
    }
}

TEST_CASE("rate adaptation is linear in normalized entropy") {
    GAConfig cfg;
    const std::size_t n = 60;
    const double hmax = std::log(double(n));
    auto r = adapt_rates(cfg, hmax, n);
    CHECK(r.p_m == doctest::Approx(cfg.p_m_max));
    CHECK(r.p_c == doctest::Approx(cfg.p_c_min));
    r = adapt_rates(cfg, 0.0, n);
    CHECK(r.p_m == doctest::Approx(cfg.p_m_min));
    CHECK(r.p_c == doctest::Approx(cfg.p_c_max));
    r = adapt_rates(cfg, 0.5 * hmax, n);
    CHECK(r.p_m == doctest::Approx(0.5 * (cfg.p_m_min + cfg.p_m_max)));
    CHECK(r.p_c == doctest::Approx(0.5 * (cfg.p_c_min + cfg.p_c_max)));
    cfg.invert_entropy_control = true;
    r = adapt_rates(cfg, hmax, n);
    CHECK(r.p_m == doctest::Approx(cfg.p_m_min));
    CHECK(r.p_c == doctest::Approx(cfg.p_c_max));
    cfg.invert_entropy_control = false;
    for (double h : {-1.0, 2.0 * hmax, 1e9}) {
        r = adapt_rates(cfg, h, n);
        CHECK(r.p_m >= cfg.p_m_min);
        CHECK(r.p_m <= cfg.p_m_max);
        CHECK(r.p_c >= cfg.p_c_min);
        CHECK(r.p_c <= cfg.p_c_max);
    }
}

TEST_CASE("initial population") {
    auto inst = noiseless_instance(3, 5);
    Rng rng(6);
    GAConfig cfg;
    cfg.population = 20;
    SUBCASE("warm start without spread copies the channel") {
        cfg.warm_sigma = 0.0;
        const auto pop = init_population(cfg, *inst.ctx, std::span<const cplx>(inst.b), rng);
        REQUIRE(pop.members.size() == 20);
        CHECK(inst.ctx->evaluations() == 20);
        for (const auto& m : pop.members) {
            CHECK(m.channels() == inst.b);
        }
        for (std::size_t i = 1; i < pop.members.size(); ++i) {
            CHECK(*pop.members[i - 1].cached_fitness() >= *pop.members[i].cached_fitness());
        }
    }
    SUBCASE("symbols are unbiased") {
        cfg.population = 100;
        double sum = 0.0;
        std::size_t count = 0;
        for (int t = 0; t < 100; ++t) {
            const auto pop = init_population(cfg, *inst.ctx, std::nullopt, rng);
            for (const auto& m : pop.members) {
                for (Symbol s : m.symbols()) {
                    sum += s;
                    ++count;
                }
            }
        }
        CHECK(std::abs(sum / double(count)) < 0.05);
    }
}

TEST_CASE("GA run invariants") {
    auto inst = noiseless_instance(4, 7);
    Rng rng(8);
    GAConfig cfg;
    cfg.population = 30;
    cfg.eval_budget = 3000;
    const auto res = run_ga(cfg, *inst.ctx, std::nullopt, rng, true);
    CHECK(res.evaluations <= cfg.eval_budget);
    CHECK(res.evaluations == inst.ctx->evaluations());
    REQUIRE(res.trace.size() == res.generations + 1);
    const double hmax = std::log(double(cfg.population));
    for (std::size_t g = 0; g < res.trace.size(); ++g) {
        const auto& t = res.trace[g];
        CHECK(t.generation == g);
        CHECK(t.entropy >= 0.0);
        CHECK(t.entropy <= hmax + 1e-12);
        if (g > 0) {
            CHECK(t.best_fitness >= res.trace[g - 1].best_fitness);
            CHECK(t.evals >= res.trace[g - 1].evals);
            CHECK(t.p_m >= cfg.p_m_min);
            CHECK(t.p_m <= cfg.p_m_max);
            CHECK(t.p_c >= cfg.p_c_min);
            CHECK(t.p_c <= cfg.p_c_max);
        }
    }
    CHECK(res.best.same_genes(res.population.best()));
    CHECK(*res.best.cached_fitness() == res.trace.back().best_fitness);
}

TEST_CASE("a budget of one population stops after initialization") {
    auto inst = noiseless_instance(2, 9);
    Rng rng(10);
    GAConfig cfg;
    cfg.population = 12;
    cfg.eval_budget = 12;
    const auto res = run_ga(cfg, *inst.ctx, std::nullopt, rng);
    CHECK(res.generations == 0);
    CHECK(res.evaluations == 12);
    Rng again(10);
    auto inst2 = noiseless_instance(2, 9);
    const auto pop = init_population(cfg, *inst2.ctx, std::nullopt, again);
    CHECK(res.best.same_genes(pop.best()));
}

TEST_CASE("noiseless U=2 with genie warm start recovers the symbols up to sign") {
    int hits = 0;
    for (int run = 0; run < 100; ++run) {
        auto inst = noiseless_instance(2, 100 + run);
        Rng rng(run);
        GAConfig cfg;
        cfg.warm_sigma = 0.0;
        cfg.eval_budget = 2000;
        const auto res = run_ga(cfg, *inst.ctx, std::span<const cplx>(inst.b), rng);
        auto best = res.best;
        resolve_sign_ambiguity(best, inst.b);
        hits += best.symbols() == inst.x;
    }
    CHECK(hits >= 99);
}

TEST_CASE("trace CSV") {
    std::vector<GenerationTrace> t{{0, 1.5, 0.25, 0.03, 0.01, 60}, {1, 2.0, 0.5, 0.04, 0.01, 70}};
    const auto path = std::filesystem::temp_directory_path() / "memud_trace_test.csv";
    write_trace_csv(t, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "generation,best_fitness,entropy,p_m,p_c,evals");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++rows;
    }
    CHECK(rows == 2);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(write_trace_csv(t, "/nonexistent-dir/x.csv"), IoError);
}
