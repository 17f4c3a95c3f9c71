// model.hpp — TLS ensemble description and operator builders
//
// Basis convention: defect 0 is the most significant tensor factor. Within a
// factor, index 0 is the excited state |e> and index 1 the ground state |g>,
// so sigma_z = diag(+1, -1) and sigma_+ = |e><g|.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "tlsspec/core.hpp"

namespace tlsspec {

struct TlsParams {
    double epsilon{0.0};  // asymmetry, Hz
    double delta{0.0};    // tunneling amplitude, Hz
    double dipole{1.0};   // dimensionless weight p_j

    void validate() const;
};

struct Splitting {
    double energy;  // Hz
    double theta;   // rad
};

Splitting tls_splitting(const TlsParams& p);

struct DisorderSpec {
    std::array<double, 2> epsilon_range{};  // Hz
    std::array<double, 2> j_range{};        // Hz
    std::uint64_t seed{0};
};

struct EnsembleSpec {
    std::vector<TlsParams> defects;
    RMatrix couplings;  // symmetric, zero diagonal, Hz; empty means uncoupled
    double gamma{0.0};  // collective decay rate, Hz
    std::optional<DisorderSpec> disorder;
    std::size_t max_defects{8};

    std::size_t size() const { return defects.size(); }
    std::size_t dim() const { return std::size_t{1} << defects.size(); }
    double coupling(std::size_t i, std::size_t j) const;
    void validate() const;
};

enum class Envelope { square, square_cosine };

// Piecewise-linear frequency -> scale map, clamped at the end points.
struct GainTable {
    std::vector<double> freq;   // Hz, strictly increasing
    std::vector<double> scale;  // > 0

    double at(double f) const;
    void validate() const;
};

struct DrivePulse {
    double carrier{0.0};    // Hz
    double amplitude{0.0};  // Hz
    double duration{0.0};   // s
    Envelope envelope{Envelope::square_cosine};
    std::optional<GainTable> gain_table;

    double effective_amplitude() const;
    // Field value E(t) in Hz; zero once t > duration.
    double field(double t) const;
    void validate() const;
};

struct OperatorMatrix {
    CMatrix entries;
    bool hermitian{false};

    std::size_t dim() const { return static_cast<std::size_t>(entries.rows()); }
};

// max |M - M^dagger| relative to max |M| (0 for the zero matrix).
double hermiticity_error(const CMatrix& m);

namespace pauli {
CMatrix sigma_x();
CMatrix sigma_y();
CMatrix sigma_z();
CMatrix sigma_plus();
CMatrix sigma_minus();
// single-site operator `op` on defect `site` of an n-defect register
CMatrix embed(const CMatrix& op, std::size_t site, std::size_t n);
}  // namespace pauli

// All builders below return matrices in angular units (rad/s) where they
// carry a frequency.
OperatorMatrix build_static_hamiltonian(const EnsembleSpec& spec);
OperatorMatrix build_polarization_operator(const EnsembleSpec& spec);

struct JumpOperators {
    OperatorMatrix s_minus;
    OperatorMatrix s_plus;
};
JumpOperators build_collective_jump_operators(const EnsembleSpec& spec);

OperatorMatrix driven_hamiltonian_at(const EnsembleSpec& spec, const DrivePulse& pulse, double t);

EnsembleSpec sample_disorder(const EnsembleSpec& spec);

// Transition frequencies (Hz) from the ground state of H0 to every other
// eigenstate, ascending.
std::vector<double> bare_transition_frequencies(const EnsembleSpec& spec);

}  // namespace tlsspec
