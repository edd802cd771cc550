#include "memud/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "memud/types.hpp"

namespace memud {

namespace {

double two_sided_z(double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw ParameterError("confidence level must lie in (0, 1)");
    }
    const boost::math::normal_distribution<double> n01;
    return boost::math::quantile(n01, 0.5 + 0.5 * confidence);
}

}  // namespace

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double confidence) {
    if (trials == 0) {
        return {0.0, 1.0};
    }
    if (successes > trials) {
        throw ParameterError("more successes than trials");
    }
    const double z = two_sided_z(confidence);
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

Interval clopper_pearson_interval(std::uint64_t successes, std::uint64_t trials,
                                  double confidence) {
    if (trials == 0) {
        return {0.0, 1.0};
    }
    if (successes > trials) {
        throw ParameterError("more successes than trials");
    }
    two_sided_z(confidence);
    const double alpha = 1.0 - confidence;
    const double k = static_cast<double>(successes);
    const double n = static_cast<double>(trials);
    Interval ci{0.0, 1.0};
    if (successes > 0) {
        ci.low = boost::math::ibeta_inv(k, n - k + 1.0, alpha / 2.0);
    }
    if (successes < trials) {
        ci.high = boost::math::ibeta_inv(k + 1.0, n - k, 1.0 - alpha / 2.0);
    }
    return ci;
}

Interval normal_mean_interval(const std::vector<double>& samples, double confidence) {
    if (samples.empty()) {
        throw ParameterError("normal_mean_interval needs at least one sample");
    }
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : samples) {
        ss += (v - mean) * (v - mean);
    }
    const double sd = samples.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    const double half = two_sided_z(confidence) * sd / std::sqrt(n);
    return {mean - half, mean + half};
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i + 1;
        while (j < idx.size() && values[idx[j]] == values[idx[i]]) {
            ++j;
        }
        // Positions i..j-1 share the mean of ranks i+1..j.
        const double r = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            ranks[idx[t]] = r;
        }
        i = j;
    }
    return ranks;
}

double chi_square_sf(double x, double dof) {
    if (!(dof > 0.0)) {
        throw ParameterError("chi-square degrees of freedom must be positive");
    }
    if (!(x > 0.0)) {
        return 1.0;
    }
    const boost::math::chi_squared_distribution<double> dist(dof);
    return boost::math::cdf(boost::math::complement(dist, x));
}

FriedmanResult friedman_test(const std::vector<std::vector<double>>& scores) {
    const std::size_t k = scores.size();
    if (k < 2) {
        throw ParameterError("Friedman test needs at least two algorithms");
    }
    const std::size_t n = scores.front().size();
    if (n < 2) {
        throw ParameterError("Friedman test needs at least two problems");
    }
    for (const auto& row : scores) {
        if (row.size() != n) {
            throw ParameterError("Friedman test: ragged score matrix");
        }
    }
    FriedmanResult res;
    res.average_ranks.assign(k, 0.0);
    std::vector<double> column(k);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t a = 0; a < k; ++a) {
            column[a] = scores[a][p];
        }
        const auto r = average_ranks(column);
        for (std::size_t a = 0; a < k; ++a) {
            res.average_ranks[a] += r[a];
        }
    }
    const double kd = static_cast<double>(k);
    const double nd = static_cast<double>(n);
    double ss = 0.0;
    for (auto& r : res.average_ranks) {
        r /= nd;
        ss += (r - (kd + 1.0) / 2.0) * (r - (kd + 1.0) / 2.0);
    }
    res.statistic = 12.0 * nd / (kd * (kd + 1.0)) * ss;
    res.p_value = chi_square_sf(res.statistic, kd - 1.0);
    return res;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw ParameterError("Wilcoxon test needs paired samples of equal length");
    }
    std::vector<double> diff;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) {
            diff.push_back(a[i] - b[i]);
        }
    }
    WilcoxonResult res;
    if (diff.empty()) {
        return res;
    }
    if (diff.size() < 5) {
        throw ParameterError("Wilcoxon test needs at least 5 non-zero differences");
    }
    std::vector<double> mags(diff.size());
    std::transform(diff.begin(), diff.end(), mags.begin(), [](double d) { return std::fabs(d); });
    const auto ranks = average_ranks(mags);
    for (std::size_t i = 0; i < diff.size(); ++i) {
        (diff[i] > 0.0 ? res.w_plus : res.w_minus) += ranks[i];
    }
    res.n = diff.size();
    res.statistic = std::min(res.w_plus, res.w_minus);

    auto sorted = mags;
    std::sort(sorted.begin(), sorted.end());
    const bool ties = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
    const double nd = static_cast<double>(res.n);

    if (res.n <= 25 && !ties) {
        // counts[w] = number of sign patterns with W+ = w.
        const std::size_t max_w = res.n * (res.n + 1) / 2;
        std::vector<double> counts(max_w + 1, 0.0);
        counts[0] = 1.0;
        for (std::size_t r = 1; r <= res.n; ++r) {
            for (std::size_t w = max_w; w >= r; --w) {
                counts[w] += counts[w - r];
            }
        }
        const auto t = static_cast<std::size_t>(std::llround(res.statistic));
        const double tail = std::accumulate(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(t) + 1, 0.0);
        res.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(res.n)));
        res.exact = true;
        return res;
    }

    double tie_term = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j] == sorted[i]) {
            ++j;
        }
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double mean = nd * (nd + 1.0) / 4.0;
    const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
    if (!(var > 0.0)) {
        return res;
    }
    const double z = std::max(0.0, std::fabs(res.statistic - mean) - 0.5) / std::sqrt(var);
    res.p_value = std::min(1.0, 2.0 * q_function(z));
    return res;
}

}  // namespace memud
