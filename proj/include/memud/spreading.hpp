#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "memud/types.hpp"

namespace memud {

/// A set of U normalized spreading codes of length N together with their
/// zero-lag cross-correlation matrix R (the Gram matrix of the codes).
struct SignatureSet {
    std::vector<std::vector<double>> codes;  // codes[i][l], each chip +-1/sqrt(N)
    int degree = 0;                          // LFSR degree m; N = 2^m - 1 for Gold sets
    RealMatrix crosscorr;                    // U x U

    std::size_t users() const { return codes.size(); }
    std::size_t length() const { return codes.empty() ? 0 : codes.front().size(); }
};

/// Binary maximal-length sequence of period 2^degree - 1 from the Fibonacci
/// LFSR whose feedback polynomial has the given exponents (leading x^degree
/// and constant term included). Values are 0/1.
std::vector<std::uint8_t> m_sequence(int degree, const std::vector<int>& poly_exponents);

/// Preferred-pair feedback polynomials used for each supported degree.
struct PreferredPair {
    std::vector<int> first;
    std::vector<int> second;
};
PreferredPair preferred_pair(int degree);

/// The full Gold family of 2^degree + 1 binary sequences: u, v, and
/// u xor (v cyclically shifted by k) for k = 0..N-1, in that order.
std::vector<std::vector<std::uint8_t>> gold_family(int degree);

/// Picks `count` distinct family members (chosen by `seed`) and normalizes them.
/// Throws ParameterError for degree outside {5,6,7}, CapacityError when
/// `count` exceeds the family size.
SignatureSet generate_gold_set(int degree, std::size_t count, std::uint64_t seed);

/// Builds a signature set from arbitrary (already normalized) codes.
SignatureSet make_signature_set(std::vector<std::vector<double>> codes, int degree = 0);

RealMatrix crosscorrelation_matrix(const SignatureSet& set);

/// One code per row, chips as decimals.
void write_signature_csv(const SignatureSet& set, const std::filesystem::path& path);

}  // namespace memud
