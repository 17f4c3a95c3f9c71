#include "tlsspec/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tlsspec {

namespace {

// Precomputed pieces of the generator; rhs() is the hot loop of every sweep.
class Generator {
public:
    Generator(const CMatrix& h0, const CMatrix& polarization, const CMatrix& s_minus, double gamma_rad)
        : gamma_(gamma_rad) {
        const CMatrix number = s_minus.adjoint() * s_minus;
        base_ = cplx(0.0, -1.0) * h0 - gamma_ * number;
        drive_ = cplx(0.0, 1.0) * polarization;
        const auto d = h0.rows();
        rows_.resize(static_cast<std::size_t>(d));
        for (Eigen::Index a = 0; a < d; ++a) {
            for (Eigen::Index c = 0; c < d; ++c) {
                const cplx v = s_minus(a, c);
                if (v.imag() != 0.0) throw NumericError("collective jump operator must be real");
                if (v.real() != 0.0) rows_[static_cast<std::size_t>(a)].push_back({c, v.real()});
            }
        }
        m_.resize(d, d);
        k_.resize(d, d);
        x_.resize(d, d);
    }

    // out = (base + i e P) rho + h.c. + 2G S rho S^dagger, with e in rad/s
    void rhs(const CMatrix& rho, double field, CMatrix& out) {
        if (field != 0.0) {
            m_ = base_ + field * drive_;
            k_.noalias() = m_ * rho;
        } else {
            k_.noalias() = base_ * rho;
        }
        out = k_ + k_.adjoint();
        if (gamma_ != 0.0) jump_term(rho, out);
    }

private:
    struct Entry {
        Eigen::Index col;
        double value;
    };

    // out += 2G S rho S^dagger using the few nonzeros per row of S; both
    // passes walk columns, which are contiguous.
    void jump_term(const CMatrix& rho, CMatrix& out) {
        const auto d = rho.rows();
        // x = rho S^T (S is real), column b = sum_e rho(:, e) S(b, e)
        x_.setZero();
        for (Eigen::Index b = 0; b < d; ++b) {
            for (const Entry& e : rows_[static_cast<std::size_t>(b)]) x_.col(b) += e.value * rho.col(e.col);
        }
        // out += 2G S x, column by column
        const double w = 2.0 * gamma_;
        for (Eigen::Index b = 0; b < d; ++b) {
            for (Eigen::Index a = 0; a < d; ++a) {
                cplx acc(0.0, 0.0);
                for (const Entry& e : rows_[static_cast<std::size_t>(a)]) acc += e.value * x_(e.col, b);
                out(a, b) += w * acc;
            }
        }
    }

    double gamma_;
    CMatrix base_;
    CMatrix drive_;
    std::vector<std::vector<Entry>> rows_;
    CMatrix m_, k_, x_;
};

double real_trace_product(const CMatrix& op, const CMatrix& rho) {
    // Tr(op rho) for Hermitian arguments
    return (op.cwiseProduct(rho.transpose())).sum().real();
}

}  // namespace

DensityMatrix DensityMatrix::pure(const CVector& psi) {
    const CVector v = psi / psi.norm();
    return DensityMatrix{v * v.adjoint()};
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return DensityMatrix{CMatrix::Identity(d, d) / static_cast<double>(dim)};
}

bool StateReport::physical(double tol) const {
    return trace_error < tol && hermiticity_error < tol && min_eigenvalue >= -tol;
}

StateReport validate_state(const DensityMatrix& state) {
    const CMatrix& rho = state.rho;
    StateReport report{};
    report.trace_error = std::abs(rho.trace() - cplx(1.0, 0.0));
    report.hermiticity_error = rho.size() == 0 ? 0.0 : (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    const CMatrix herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm, Eigen::EigenvaluesOnly);
    report.min_eigenvalue = solver.eigenvalues().minCoeff();
    return report;
}

DensityMatrix ground_state(const EnsembleSpec& spec) {
    const OperatorMatrix h0 = build_static_hamiltonian(spec);
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h0.entries);
    return DensityMatrix::pure(solver.eigenvectors().col(0));
}

CMatrix lindblad_rhs(const DensityMatrix& rho, const OperatorMatrix& h, const OperatorMatrix& s_minus,
                     const OperatorMatrix& s_plus, double gamma) {
    const auto d = rho.rho.rows();
    for (const CMatrix* m : {&h.entries, &s_minus.entries, &s_plus.entries}) {
        if (m->rows() != d || m->cols() != d) throw ConfigError("lindblad_rhs: dimension mismatch");
    }
    if (rho.rho.cols() != d) throw ConfigError("lindblad_rhs: density matrix is not square");
    const double g = angular(gamma);
    const CMatrix& sm = s_minus.entries;
    const CMatrix& sp = s_plus.entries;
    const CMatrix number = sp * sm;
    const cplx minus_i(0.0, -1.0);
    return minus_i * (h.entries * rho.rho - rho.rho * h.entries) +
           g * (2.0 * sm * rho.rho * sp - number * rho.rho - rho.rho * number);
}

std::vector<double> EvolutionResult::times() const {
    std::vector<double> t(population.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = t0 + static_cast<double>(i) * record_dt;
    return t;
}

std::size_t default_record_stride(double dt) {
    const auto stride = static_cast<std::size_t>(std::floor(0.1e-9 / dt * (1.0 + 1e-12)));
    return std::max<std::size_t>(1, stride);
}

EvolutionResult evolve(const EnsembleSpec& spec, const DrivePulse& pulse, double t_end, double dt,
                       const std::optional<DensityMatrix>& rho0, const EvolveOptions& options) {
    spec.validate();
    pulse.validate();
    if (!(dt > 0.0)) throw ConfigError("time step must be > 0");
    if (dt > 1.0 / (20.0 * pulse.carrier) * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "time step " << dt << " s does not resolve the " << pulse.carrier
           << " Hz carrier (need dt <= 1/(20 carrier))";
        throw ConfigError(os.str());
    }
    if (t_end < pulse.duration) throw ConfigError("t_end must cover the pulse duration");

    const OperatorMatrix h0 = build_static_hamiltonian(spec);
    const OperatorMatrix pol = build_polarization_operator(spec);
    const JumpOperators jumps = build_collective_jump_operators(spec);
    const CMatrix number = jumps.s_plus.entries * jumps.s_minus.entries;

    DensityMatrix state = rho0 ? *rho0 : ground_state(spec);
    if (state.dim() != spec.dim() || state.rho.cols() != state.rho.rows())
        throw ConfigError("initial state dimension does not match the ensemble");
    if (rho0) {
        const StateReport rep = validate_state(state);
        if (!rep.physical(1e-8)) throw ConfigError("initial density matrix is not physical");
    }

    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    const std::size_t stride = options.record_stride.value_or(default_record_stride(dt));
    if (stride == 0) throw ConfigError("record stride must be >= 1");

    EvolutionResult result;
    result.dt = dt;
    result.steps = steps;
    result.record_stride = stride;
    result.record_dt = dt * static_cast<double>(stride);
    const std::size_t records = steps / stride + 1;
    result.population.reserve(records);
    if (options.record_dipole) result.dipole.reserve(records);
    result.pulse_off_index =
        static_cast<std::size_t>(std::llround(pulse.duration / result.record_dt));

    Generator gen(h0.entries, pol.entries, jumps.s_minus.entries, angular(spec.gamma));
    const double amp = angular(pulse.effective_amplitude());
    const double omega = angular(pulse.carrier);

    const auto d = static_cast<Eigen::Index>(spec.dim());
    CMatrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);
    CMatrix& rho = state.rho;

    auto record = [&]() {
        result.population.push_back(real_trace_product(number, rho));
        if (options.record_dipole) result.dipole.push_back(real_trace_product(pol.entries, rho));
    };

    record();
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const bool on = (t + 0.5 * dt) < pulse.duration;
        // H(t) = H0 - E(t) P, so the generator sees +E(t) on the i P term
        const double e0 = on ? amp * std::cos(omega * t) : 0.0;
        const double eh = on ? amp * std::cos(omega * (t + 0.5 * dt)) : 0.0;
        const double e1 = on ? amp * std::cos(omega * (t + dt)) : 0.0;

        gen.rhs(rho, e0, k1);
        tmp = rho + (0.5 * dt) * k1;
        gen.rhs(tmp, eh, k2);
        tmp = rho + (0.5 * dt) * k2;
        gen.rhs(tmp, eh, k3);
        tmp = rho + dt * k3;
        gen.rhs(tmp, e1, k4);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        if (options.resymmetrize_every != 0 && (k + 1) % options.resymmetrize_every == 0) {
            tmp = 0.5 * (rho + rho.adjoint());
            rho = tmp;
        }
        if ((k + 1) % stride == 0) record();
        if (!std::isfinite(rho(0, 0).real())) {
            std::ostringstream os;
            os << "propagation diverged at t = " << t + dt << " s";
            throw NumericError(os.str());
        }
    }
    result.final_state = std::move(state);
    return result;
}

}  // namespace tlsspec
