// lindblad.hpp — density-matrix propagation under collective decay

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tlsspec/model.hpp"

namespace tlsspec {

struct DensityMatrix {
    CMatrix rho;

    std::size_t dim() const { return static_cast<std::size_t>(rho.rows()); }
    static DensityMatrix pure(const CVector& psi);
    static DensityMatrix maximally_mixed(std::size_t dim);
};

struct StateReport {
    double trace_error;
    double hermiticity_error;
    double min_eigenvalue;

    bool physical(double tol = 1e-8) const;
};

StateReport validate_state(const DensityMatrix& rho);

// Lowest eigenvector of the static Hamiltonian.
DensityMatrix ground_state(const EnsembleSpec& spec);

// -i[H, rho] + G (2 S- rho S+ - S+S- rho - rho S+S-), with G = 2 pi gamma.
// `h` is expected in rad/s, `gamma` in Hz.
CMatrix lindblad_rhs(const DensityMatrix& rho, const OperatorMatrix& h, const OperatorMatrix& s_minus,
                     const OperatorMatrix& s_plus, double gamma);

struct EvolveOptions {
    std::optional<std::size_t> record_stride;  // default max(1, floor(0.1 ns / dt))
    bool record_dipole{true};
    std::size_t resymmetrize_every{1000};
};

struct EvolutionResult {
    double t0{0.0};
    double record_dt{0.0};
    std::vector<double> population;  // <S+ S->
    std::vector<double> dipole;      // <P>, empty when not recorded
    std::size_t pulse_off_index{0};  // first recorded sample with the drive off
    DensityMatrix final_state;
    double dt{0.0};
    std::size_t steps{0};
    std::size_t record_stride{1};

    std::vector<double> times() const;
};

inline double default_time_step(double carrier) { return 1.0 / (50.0 * carrier); }
std::size_t default_record_stride(double dt);

// Fixed-step RK4. The drive is on for every step whose midpoint lies before
// the pulse end, so the effective switch-off is within dt/2 of `duration`.
EvolutionResult evolve(const EnsembleSpec& spec, const DrivePulse& pulse, double t_end, double dt,
                       const std::optional<DensityMatrix>& rho0 = std::nullopt,
                       const EvolveOptions& options = {});

}  // namespace tlsspec
