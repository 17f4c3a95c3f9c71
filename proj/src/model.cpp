#include "tlsspec/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace tlsspec {

namespace {

bool finite(double v) { return std::isfinite(v); }

OperatorMatrix checked_hermitian(CMatrix m, const char* what) {
    const double err = hermiticity_error(m);
    if (err >= 1e-12) {
        std::ostringstream os;
        os << what << " failed hermiticity check (" << err << ")";
        throw NumericError(os.str());
    }
    return OperatorMatrix{std::move(m), true};
}

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

void TlsParams::validate() const {
    if (!finite(epsilon) || !finite(delta) || !finite(dipole))
        throw ConfigError("TLS parameters must be finite");
    if (delta < 0.0) throw ConfigError("TLS tunneling amplitude must be >= 0");
    if (epsilon == 0.0 && delta == 0.0)
        throw ConfigError("TLS with epsilon = delta = 0 has no splitting");
}

Splitting tls_splitting(const TlsParams& p) {
    p.validate();
    return {std::hypot(p.epsilon, p.delta), std::atan2(p.delta, p.epsilon)};
}

double EnsembleSpec::coupling(std::size_t i, std::size_t j) const {
    if (couplings.size() == 0) return 0.0;
    return couplings(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

void EnsembleSpec::validate() const {
    if (defects.empty()) throw ConfigError("ensemble needs at least one defect");
    if (defects.size() > max_defects) {
        std::ostringstream os;
        os << "ensemble of " << defects.size() << " defects exceeds the cap of " << max_defects
           << " (Hilbert dimension 2^N)";
        throw ConfigError(os.str());
    }
    for (const auto& d : defects) d.validate();
    if (!finite(gamma) || gamma < 0.0) throw ConfigError("collective decay rate must be >= 0");
    if (couplings.size() != 0) {
        const auto n = static_cast<Eigen::Index>(defects.size());
        if (couplings.rows() != n || couplings.cols() != n)
            throw ConfigError("coupling matrix must be N x N");
        for (Eigen::Index i = 0; i < n; ++i) {
            if (couplings(i, i) != 0.0) throw ConfigError("coupling matrix needs a zero diagonal");
            for (Eigen::Index j = 0; j < n; ++j) {
                if (!finite(couplings(i, j))) throw ConfigError("coupling entries must be finite");
                if (couplings(i, j) != couplings(j, i))
                    throw ConfigError("coupling matrix must be symmetric");
            }
        }
    }
    if (disorder) {
        const auto& d = *disorder;
        if (d.epsilon_range[0] > d.epsilon_range[1]) throw ConfigError("disorder epsilon_range has lo > hi");
        if (d.j_range[0] > d.j_range[1]) throw ConfigError("disorder j_range has lo > hi");
    }
}

double GainTable::at(double f) const {
    if (freq.size() == 1 || f <= freq.front()) return scale.front();
    if (f >= freq.back()) return scale.back();
    const auto it = std::upper_bound(freq.begin(), freq.end(), f);
    const auto hi = static_cast<std::size_t>(it - freq.begin());
    const auto lo = hi - 1;
    const double w = (f - freq[lo]) / (freq[hi] - freq[lo]);
    return scale[lo] + w * (scale[hi] - scale[lo]);
}

void GainTable::validate() const {
    if (freq.empty() || freq.size() != scale.size())
        throw ConfigError("gain table needs matching, non-empty frequency and scale columns");
    for (std::size_t i = 0; i < freq.size(); ++i) {
        if (!finite(freq[i]) || !finite(scale[i])) throw ConfigError("gain table entries must be finite");
        if (scale[i] <= 0.0) throw ConfigError("gain table entries must be strictly positive");
        if (i > 0 && freq[i] <= freq[i - 1]) throw ConfigError("gain table frequencies must increase");
    }
}

double DrivePulse::effective_amplitude() const {
    return gain_table ? amplitude * gain_table->at(carrier) : amplitude;
}

double DrivePulse::field(double t) const {
    if (t < 0.0) throw ConfigError("drive evaluated at negative time");
    if (t > duration) return 0.0;
    return effective_amplitude() * std::cos(angular(carrier) * t);
}

void DrivePulse::validate() const {
    if (!finite(carrier) || carrier <= 0.0) throw ConfigError("pulse carrier must be > 0");
    if (!finite(amplitude) || amplitude < 0.0) throw ConfigError("pulse amplitude must be >= 0");
    if (!finite(duration) || duration <= 0.0) throw ConfigError("pulse duration must be > 0");
    if (gain_table) gain_table->validate();
}

double hermiticity_error(const CMatrix& m) {
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    return (m - m.adjoint()).cwiseAbs().maxCoeff() / scale;
}

namespace pauli {

CMatrix sigma_x() {
    CMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

CMatrix sigma_y() {
    CMatrix m(2, 2);
    m << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
    return m;
}

CMatrix sigma_z() {
    CMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

CMatrix sigma_plus() {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 1) = 1.0;
    return m;
}

CMatrix sigma_minus() {
    CMatrix m = CMatrix::Zero(2, 2);
    m(1, 0) = 1.0;
    return m;
}

CMatrix embed(const CMatrix& op, std::size_t site, std::size_t n) {
    if (site >= n) throw ConfigError("operator site out of range");
    const auto dim = Eigen::Index{1} << n;
    const auto shift = static_cast<int>(n - 1 - site);
    CMatrix out = CMatrix::Zero(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            // identity on every other factor
            if (((r ^ c) & ~(Eigen::Index{1} << shift)) != 0) continue;
            out(r, c) = op((r >> shift) & 1, (c >> shift) & 1);
        }
    }
    return out;
}

}  // namespace pauli

OperatorMatrix build_static_hamiltonian(const EnsembleSpec& spec) {
    spec.validate();
    const std::size_t n = spec.size();
    const auto dim = static_cast<Eigen::Index>(spec.dim());
    CMatrix h = CMatrix::Zero(dim, dim);
    const CMatrix sz = pauli::sigma_z();
    const CMatrix sx = pauli::sigma_x();
    for (std::size_t j = 0; j < n; ++j) {
        h += (0.5 * angular(tls_splitting(spec.defects[j]).energy)) * pauli::embed(sz, j, n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double jij = spec.coupling(i, j);
            if (jij == 0.0) continue;
            h += angular(jij) * (pauli::embed(sx, i, n) * pauli::embed(sx, j, n));
        }
    }
    return checked_hermitian(std::move(h), "static Hamiltonian");
}

OperatorMatrix build_polarization_operator(const EnsembleSpec& spec) {
    spec.validate();
    const std::size_t n = spec.size();
    const auto dim = static_cast<Eigen::Index>(spec.dim());
    CMatrix p = CMatrix::Zero(dim, dim);
    for (std::size_t j = 0; j < n; ++j) {
        const auto& d = spec.defects[j];
        const double theta = tls_splitting(d).theta;
        CMatrix local = std::cos(theta) * pauli::sigma_z() + std::sin(theta) * pauli::sigma_x();
        p += d.dipole * pauli::embed(local, j, n);
    }
    return checked_hermitian(std::move(p), "polarization operator");
}

JumpOperators build_collective_jump_operators(const EnsembleSpec& spec) {
    spec.validate();
    const std::size_t n = spec.size();
    const auto dim = static_cast<Eigen::Index>(spec.dim());
    CMatrix sm = CMatrix::Zero(dim, dim);
    const CMatrix lower = pauli::sigma_minus();
    for (std::size_t j = 0; j < n; ++j) sm += pauli::embed(lower, j, n);
    CMatrix sp = sm.adjoint();
    return {OperatorMatrix{std::move(sm), false}, OperatorMatrix{std::move(sp), false}};
}

OperatorMatrix driven_hamiltonian_at(const EnsembleSpec& spec, const DrivePulse& pulse, double t) {
    pulse.validate();
    if (t < 0.0) throw ConfigError("driven Hamiltonian requested at negative time");
    OperatorMatrix h = build_static_hamiltonian(spec);
    const double e = pulse.field(t);
    if (e != 0.0) h.entries -= angular(e) * build_polarization_operator(spec).entries;
    return h;
}

EnsembleSpec sample_disorder(const EnsembleSpec& spec) {
    if (!spec.disorder) throw ConfigError("sample_disorder requires a disorder description");
    spec.validate();
    const auto& d = *spec.disorder;
    std::mt19937_64 rng(d.seed);
    auto draw = [&rng](const std::array<double, 2>& range) {
        return range[0] + (range[1] - range[0]) * unit_uniform(rng);
    };

    EnsembleSpec out = spec;
    out.disorder.reset();
    // The drawn value is the bare splitting; the template's mixing angle is
    // kept so that delta = 0 templates reproduce epsilon = splitting.
    for (auto& defect : out.defects) {
        const double theta = tls_splitting(defect).theta;
        const double energy = draw(d.epsilon_range);
        defect.epsilon = energy * std::cos(theta);
        defect.delta = std::max(0.0, energy * std::sin(theta));
        if (std::abs(defect.epsilon) < 1e-9 * std::abs(energy)) defect.epsilon = 0.0;
    }
    const auto n = static_cast<Eigen::Index>(out.defects.size());
    out.couplings = RMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double jij = draw(d.j_range);
            out.couplings(i, j) = jij;
            out.couplings(j, i) = jij;
        }
    }
    return out;
}

std::vector<double> bare_transition_frequencies(const EnsembleSpec& spec) {
    const OperatorMatrix h0 = build_static_hamiltonian(spec);
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h0.entries, Eigen::EigenvaluesOnly);
    const RVector& ev = solver.eigenvalues();
    std::vector<double> out;
    for (Eigen::Index k = 1; k < ev.size(); ++k) out.push_back(linear(ev(k) - ev(0)));
    return out;
}

}  // namespace tlsspec
