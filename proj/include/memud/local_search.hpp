#pragma once

#include <cstdint>
#include <vector>

#include "memud/likelihood.hpp"

namespace memud {

enum class GainMode {
    // O(1) per candidate from the rank-one change of the quadratic metric.
    incremental,
    // Re-evaluates the whole metric for every candidate. Reference path.
    full,
};

struct LkConfig {
    std::size_t max_passes = 10;
    GainMode mode = GainMode::incremental;
    // A pass is accepted only if its best cumulative gain exceeds
    // rel_tolerance * (1 + |fitness|); keeps rounding noise out.
    double rel_tolerance = 1e-12;

    void validate() const;
};

/// Phi(c with pos flipped) - Phi(c). Counts one evaluation.
double bit_gain(FitnessContext& ctx, const Chromosome& c, std::size_t pos);

struct LkPassResult {
    Chromosome chromosome;
    // Phi(output) - Phi(input); exactly 0 when the input is returned.
    double gain = 0.0;
    // Full flip order of the pass (K entries) and how many were kept.
    std::vector<std::size_t> order;
    std::size_t kept = 0;
    std::uint64_t evaluations = 0;
};

/// One variable-depth pass: K sequential flips, each at the unflipped position
/// with the largest gain (lowest index on ties), negative gains included. The
/// best prefix is kept if its cumulative gain is positive.
LkPassResult lk_pass(FitnessContext& ctx, const Chromosome& c, const LkConfig& cfg = {});

/// Evaluation-equivalents charged for one pass over K positions: K(K+1)/2.
std::uint64_t lk_pass_cost(std::size_t genes);

struct RefineResult {
    Chromosome chromosome;
    std::size_t passes = 0;
    // True when the last pass found no improvement (1-opt local optimum).
    bool converged = false;
    std::uint64_t evaluations = 0;
    // Fitness after each accepted pass, starting with the input.
    std::vector<double> fitness_history;
};

/// Repeats lk_pass until a pass brings no gain or max_passes is reached.
RefineResult refine(FitnessContext& ctx, const Chromosome& c, const LkConfig& cfg = {});

}  // namespace memud
