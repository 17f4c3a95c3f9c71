// helpers.hpp — shared fixtures for the unit tests

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "tlsspec/lindblad.hpp"

namespace testing {

inline tlsspec::DrivePulse pulse(double carrier, double amplitude, double duration) {
    tlsspec::DrivePulse p;
    p.carrier = carrier;
    p.amplitude = amplitude;
    p.duration = duration;
    return p;
}

// Single transversely driven defect of bare frequency f (Hz).
inline tlsspec::EnsembleSpec single(double f, double gamma = 0.0) {
    tlsspec::EnsembleSpec s;
    s.defects = {{0.0, f, 1.0}};
    s.gamma = gamma;
    return s;
}

inline tlsspec::EnsembleSpec pair(double f1, double f2, double j, double gamma) {
    tlsspec::EnsembleSpec s;
    s.defects = {{0.0, f1, 1.0}, {0.0, f2, 1.0}};
    s.couplings = tlsspec::RMatrix::Zero(2, 2);
    s.couplings(0, 1) = s.couplings(1, 0) = j;
    s.gamma = gamma;
    return s;
}

inline tlsspec::CMatrix random_density(int dim, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    tlsspec::CMatrix a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = tlsspec::cplx(n(rng), n(rng));
    tlsspec::CMatrix rho = a * a.adjoint();
    return rho / rho.trace().real();
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("tlsspec-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace testing
