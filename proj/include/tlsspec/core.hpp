// core.hpp — shared scalar/matrix aliases, unit helpers and the error hierarchy

#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tlsspec {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
// Row-major so that map rows (one per drive frequency) are contiguous on disk.
using RMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

// User-facing frequencies are linear (Hz); dynamics run in rad/s.
inline constexpr double angular(double hz) { return kTwoPi * hz; }
inline constexpr double linear(double rad_per_s) { return rad_per_s / kTwoPi; }

// Exit-code categories surfaced by the CLI.
enum class ErrorCategory { config = 2, io = 3, numeric = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}
    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorCategory::numeric, what) {}
};

class IoError : public Error {
public:
    enum class Kind {
        unwritable,
        exists,
        not_found,
        schema,
        unsupported_version,
        shape_mismatch,
        dtype_mismatch,
        format,
    };
    IoError(Kind kind, const std::string& what) : Error(ErrorCategory::io, what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace tlsspec
