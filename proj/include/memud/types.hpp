#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace memud {

using cplx = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

// Bipolar symbol, always -1 or +1.
using Symbol = std::int8_t;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad argument to a library call (unsupported degree, mismatched sizes...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Requested more spreading codes than the family holds.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Singular matrices and similar numerical breakdowns.
class NumericalError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

inline Symbol sign_of(double v) { return v < 0.0 ? Symbol{-1} : Symbol{1}; }

}  // namespace memud
