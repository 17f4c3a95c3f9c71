// floquet.hpp — quasi-energies and spectral response of the periodically
// driven ensemble (the in-pulse part of the dynamics).
//
// Fourier convention: a Floquet mode is |u(t)> = sum_m e^{i m W t} |u^m>, and
// the extended Hamiltonian for H(t) = H0 + V e^{iWt} + V^dagger e^{-iWt} has
// diagonal blocks H0 + m W, block (m, m-1) = V and block (m, m+1) = V^dagger.

#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "tlsspec/model.hpp"

namespace tlsspec {

// Bessel function of the first kind J_n(x) for integer n, any real x.
double bessel_j(int n, double x);

// Block-tridiagonal extended Hamiltonian, dimension (2 m_max + 1) dim(h0).
// Block index 0 corresponds to harmonic -m_max. Units follow the inputs.
CMatrix build_extended_hamiltonian(const CMatrix& h0, const CMatrix& v, double drive_freq, int m_max);

struct FloquetOptions {
    int m_max{12};
    double tolerance{0.1e6};  // Hz, on convergence_error
    int max_doublings{2};
};

struct FloquetSpectrum {
    double drive_freq{0.0};                // Hz
    int harmonics{0};                      // truncation actually used
    std::vector<double> quasi_energies;    // Hz, folded into (-W/2, W/2], ascending
    double convergence_error{0.0};         // Hz
    bool converged{false};
};

// Folds a frequency into (-w/2, w/2].
double fold_quasi_energy(double value, double w);

// Throws NumericError when convergence_error stays above tolerance after
// the allowed number of doublings.
FloquetSpectrum quasi_energies(const EnsembleSpec& spec, const DrivePulse& pulse,
                               const FloquetOptions& options = {});

// Quasi-energies over a list of drive frequencies; rows follow `drive_freq`.
struct FloquetSweep {
    std::vector<double> drive_freq;     // Hz
    RMatrix quasi_energies;             // Hz, one row per drive frequency
    std::vector<double> convergence_error;
    std::vector<double> harmonics;      // truncation used per row
    nlohmann::json metadata = nlohmann::json::object();
};

FloquetSweep floquet_sweep(const EnsembleSpec& spec, const DrivePulse& pulse_template,
                           const std::vector<double>& drive_freq, const FloquetOptions& options = {},
                           std::size_t workers = 1);

// 2 A J_n(2A / W), in Hz.
double n_photon_coupling(double amplitude, double drive_freq, int n);

// Physical Floquet states: one representative per replica family, the one
// with the largest weight in the m = 0 block. Energies are unfolded (Hz).
struct FloquetStates {
    double drive_freq{0.0};
    int m_max{0};
    std::size_t dim{0};
    std::vector<double> energies;       // Hz
    std::vector<CVector> modes;         // extended-space eigenvectors
    std::vector<double> central_weight; // weight in the m = 0 block
};

FloquetStates floquet_states(const EnsembleSpec& spec, const DrivePulse& pulse, int m_max);

// d^m_{ab} = (1/T) int e^{imWt} <u_a(t)|P|u_b(t)> dt; rows a, cols b.
CMatrix floquet_dipole(const FloquetStates& states, const CMatrix& polarization, int m);

struct FloquetResponse {
    std::vector<double> omega_grid;  // Hz
    std::vector<cplx> chi;           // arbitrary units
    double eta{1e6};                 // Hz
    int n{0};
    int m{0};
    std::vector<double> poles;       // distinct pole frequencies with non-negligible residue, Hz
};

FloquetResponse floquet_response(const EnsembleSpec& spec, const DrivePulse& pulse, int m_max,
                                 const std::vector<double>& omega_grid, double eta, int n, int m);

}  // namespace tlsspec
