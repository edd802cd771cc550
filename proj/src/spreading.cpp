#include "memud/spreading.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

#include "memud/rng.hpp"

namespace memud {

std::vector<std::uint8_t> m_sequence(int degree, const std::vector<int>& poly_exponents) {
    if (degree < 2 || degree > 30) {
        throw ParameterError("m_sequence: degree out of range");
    }
    // Feedback taps: a[n+m] = xor of a[n+k] for every exponent k < m present
    // in the polynomial.
    std::vector<int> taps;
    for (int e : poly_exponents) {
        if (e < 0 || e > degree) {
            throw ParameterError("m_sequence: polynomial exponent out of range");
        }
        if (e < degree) {
            taps.push_back(e);
        }
    }
    const std::size_t period = (std::size_t{1} << degree) - 1;
    std::vector<std::uint8_t> seq(period + static_cast<std::size_t>(degree));
    for (int i = 0; i < degree; ++i) {
        seq[static_cast<std::size_t>(i)] = 1;
    }
    for (std::size_t n = 0; n + static_cast<std::size_t>(degree) < seq.size(); ++n) {
        std::uint8_t bit = 0;
        for (int k : taps) {
            bit ^= seq[n + static_cast<std::size_t>(k)];
        }
        seq[n + static_cast<std::size_t>(degree)] = bit;
    }
    seq.resize(period);
    return seq;
}

PreferredPair preferred_pair(int degree) {
    switch (degree) {
    case 5:
        return {{5, 2, 0}, {5, 4, 3, 2, 0}};
    case 6:
        return {{6, 1, 0}, {6, 5, 2, 1, 0}};
    case 7:
        return {{7, 3, 0}, {7, 3, 2, 1, 0}};
    default:
        throw ParameterError("unsupported Gold degree " + std::to_string(degree) +
                             " (supported: 5, 6, 7)");
    }
}

std::vector<std::vector<std::uint8_t>> gold_family(int degree) {
    const auto pair = preferred_pair(degree);
    const auto u = m_sequence(degree, pair.first);
    const auto v = m_sequence(degree, pair.second);
    const std::size_t n = u.size();

    std::vector<std::vector<std::uint8_t>> family;
    family.reserve(n + 2);
    family.push_back(u);
    family.push_back(v);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<std::uint8_t> code(n);
        for (std::size_t l = 0; l < n; ++l) {
            code[l] = u[l] ^ v[(l + k) % n];
        }
        family.push_back(std::move(code));
    }
    return family;
}

SignatureSet make_signature_set(std::vector<std::vector<double>> codes, int degree) {
    if (codes.empty()) {
        throw ParameterError("signature set needs at least one code");
    }
    const std::size_t n = codes.front().size();
    for (const auto& c : codes) {
        if (c.size() != n || n == 0) {
            throw ParameterError("signature codes must share a non-zero length");
        }
    }
    SignatureSet set;
    set.codes = std::move(codes);
    set.degree = degree;
    set.crosscorr = crosscorrelation_matrix(set);
    return set;
}

SignatureSet generate_gold_set(int degree, std::size_t count, std::uint64_t seed) {
    auto family = gold_family(degree);
    if (count < 1) {
        throw ParameterError("generate_gold_set: count must be at least 1");
    }
    if (count > family.size()) {
        throw CapacityError("requested " + std::to_string(count) + " codes but the degree-" +
                            std::to_string(degree) + " Gold family holds " +
                            std::to_string(family.size()));
    }

    std::vector<std::size_t> members(family.size());
    std::iota(members.begin(), members.end(), std::size_t{0});
    Rng rng(seed);
    // Partial Fisher-Yates; std::shuffle's draw pattern is library specific.
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t span = members.size() - i;
        const std::size_t j = i + static_cast<std::size_t>(rng() % span);
        std::swap(members[i], members[j]);
    }

    const double chip = 1.0 / std::sqrt(static_cast<double>(family.front().size()));
    std::vector<std::vector<double>> codes;
    codes.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto& bits = family[members[i]];
        std::vector<double> code(bits.size());
        std::transform(bits.begin(), bits.end(), code.begin(),
                       [chip](std::uint8_t b) { return b ? -chip : chip; });
        codes.push_back(std::move(code));
    }
    return make_signature_set(std::move(codes), degree);
}

RealMatrix crosscorrelation_matrix(const SignatureSet& set) {
    const auto u = static_cast<Eigen::Index>(set.codes.size());
    RealMatrix r(u, u);
    for (Eigen::Index i = 0; i < u; ++i) {
        for (Eigen::Index j = i; j < u; ++j) {
            const auto& a = set.codes[static_cast<std::size_t>(i)];
            const auto& b = set.codes[static_cast<std::size_t>(j)];
            const double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
            r(i, j) = dot;
            r(j, i) = dot;
        }
    }
    return r;
}

void write_signature_csv(const SignatureSet& set, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    char buf[32];
    for (const auto& code : set.codes) {
        for (std::size_t l = 0; l < code.size(); ++l) {
            std::snprintf(buf, sizeof buf, "%.17g", code[l]);
            out << (l ? "," : "") << buf;
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace memud
