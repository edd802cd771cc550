#pragma once

#include <cstdint>
#include <vector>

namespace memud {

/// Q(x) = P(N(0,1) > x).
double q_function(double x);

struct Interval {
    double low = 0.0;
    double high = 0.0;

    double halfwidth() const { return 0.5 * (high - low); }
    bool overlaps(const Interval& o) const { return low <= o.high && o.low <= high; }
    bool contains(double v) const { return low <= v && v <= high; }
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double confidence = 0.95);

/// Exact (Clopper-Pearson) binomial interval.
Interval clopper_pearson_interval(std::uint64_t successes, std::uint64_t trials,
                                  double confidence = 0.95);

/// Mean +- z * sd / sqrt(n).
Interval normal_mean_interval(const std::vector<double>& samples, double confidence = 0.95);

/// Ranks 1..n with average ranks for ties; smaller values get smaller ranks.
std::vector<double> average_ranks(const std::vector<double>& values);

struct FriedmanResult {
    std::vector<double> average_ranks;  // per algorithm, 1 = best (lowest score)
    double statistic = 0.0;             // chi-square with k - 1 degrees of freedom
    double p_value = 1.0;
};

/// scores[a][p] is the score (lower is better) of algorithm a on problem p.
/// Needs at least 2 algorithms and 2 problems.
FriedmanResult friedman_test(const std::vector<std::vector<double>>& scores);

struct WilcoxonResult {
    double statistic = 0.0;  // min(W+, W-)
    double w_plus = 0.0;
    double w_minus = 0.0;
    std::size_t n = 0;  // pairs with non-zero difference
    double p_value = 1.0;  // two-sided
    bool exact = false;
};

/// Signed-rank test on paired samples. Exact null distribution for n <= 25
/// without tied magnitudes, normal approximation with tie and continuity
/// correction otherwise. All-zero differences give p = 1; fewer than 5
/// non-zero pairs is a ParameterError.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double dof);

}  // namespace memud
