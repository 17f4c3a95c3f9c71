#include "tlsspec/floquet.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tlsspec {

namespace {

struct Pieces {
    CMatrix h0;  // Hz
    CMatrix v;   // Hz, coefficient of e^{iWt}
    CMatrix polarization;
};

Pieces drive_pieces(const EnsembleSpec& spec, const DrivePulse& pulse) {
    spec.validate();
    pulse.validate();
    Pieces p;
    p.h0 = build_static_hamiltonian(spec).entries / kTwoPi;
    p.polarization = build_polarization_operator(spec).entries;
    // -A cos(Wt) P = -(A/2) P e^{iWt} - (A/2) P e^{-iWt}
    p.v = -0.5 * pulse.effective_amplitude() * p.polarization;
    return p;
}

double circular_distance(double a, double b, double w) {
    const double d = std::fmod(std::abs(a - b), w);
    return std::min(d, w - d);
}

// Largest distance from any value in `a` to its nearest partner in `b`
// (and vice versa), measured on the circle of circumference w.
double matched_error(const std::vector<double>& a, const std::vector<double>& b, double w) {
    double worst = 0.0;
    auto one_way = [&](const std::vector<double>& from, const std::vector<double>& to) {
        for (double x : from) {
            double best = w;
            for (double y : to) best = std::min(best, circular_distance(x, y, w));
            worst = std::max(worst, best);
        }
    };
    one_way(a, b);
    one_way(b, a);
    return worst;
}

FloquetStates solve_states(const Pieces& p, double drive_freq, int m_max) {
    const CMatrix ext = build_extended_hamiltonian(p.h0, p.v, drive_freq, m_max);
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(ext);
    if (solver.info() != Eigen::Success) throw NumericError("extended Hamiltonian diagonalization failed");

    const auto d = p.h0.rows();
    const auto blocks = 2 * m_max + 1;
    const auto total = d * blocks;
    const auto centre = static_cast<Eigen::Index>(m_max) * d;

    std::vector<double> weight(static_cast<std::size_t>(total));
    for (Eigen::Index k = 0; k < total; ++k)
        weight[static_cast<std::size_t>(k)] = solver.eigenvectors().col(k).segment(centre, d).squaredNorm();

    std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return weight[static_cast<std::size_t>(a)] > weight[static_cast<std::size_t>(b)];
    });

    FloquetStates out;
    out.drive_freq = drive_freq;
    out.m_max = m_max;
    out.dim = static_cast<std::size_t>(d);
    const double tol = 1e-6 * drive_freq;
    for (Eigen::Index idx : order) {
        if (out.energies.size() == out.dim) break;
        const double e = solver.eigenvalues()(idx);
        const auto vec = solver.eigenvectors().col(idx);
        bool replica = false;
        for (std::size_t a = 0; a < out.energies.size() && !replica; ++a) {
            const double shift = (e - out.energies[a]) / drive_freq;
            const auto k = static_cast<Eigen::Index>(std::llround(shift));
            if (std::abs(e - out.energies[a] - static_cast<double>(k) * drive_freq) > tol) continue;
            // replica of a shifted by k harmonics: u_c^n = u_a^{n-k}
            cplx overlap(0.0, 0.0);
            for (Eigen::Index n = 0; n < blocks; ++n) {
                const Eigen::Index src = n - k;
                if (src < 0 || src >= blocks) continue;
                overlap += out.modes[a].segment(src * d, d).dot(vec.segment(n * d, d));
            }
            replica = std::abs(overlap) > 0.5;
        }
        if (replica) continue;
        out.energies.push_back(e);
        out.modes.emplace_back(vec);
        out.central_weight.push_back(weight[static_cast<std::size_t>(idx)]);
    }
    if (out.energies.size() != out.dim) throw NumericError("could not isolate one Floquet state per level");
    return out;
}

std::vector<double> folded(const FloquetStates& s) {
    std::vector<double> q;
    q.reserve(s.energies.size());
    for (double e : s.energies) q.push_back(fold_quasi_energy(e, s.drive_freq));
    std::sort(q.begin(), q.end());
    return q;
}

}  // namespace

CMatrix build_extended_hamiltonian(const CMatrix& h0, const CMatrix& v, double drive_freq, int m_max) {
    if (m_max < 1) throw ConfigError("extended Hamiltonian needs m_max >= 1");
    if (h0.rows() != h0.cols() || v.rows() != h0.rows() || v.cols() != h0.cols())
        throw ConfigError("extended Hamiltonian: block dimensions disagree");
    const auto d = h0.rows();
    const auto blocks = 2 * static_cast<Eigen::Index>(m_max) + 1;
    CMatrix ext = CMatrix::Zero(d * blocks, d * blocks);
    const CMatrix v_dag = v.adjoint();
    for (Eigen::Index b = 0; b < blocks; ++b) {
        const double m = static_cast<double>(b - m_max);
        ext.block(b * d, b * d, d, d) = h0;
        ext.block(b * d, b * d, d, d).diagonal().array() += m * drive_freq;
        if (b > 0) ext.block(b * d, (b - 1) * d, d, d) = v;
        if (b + 1 < blocks) ext.block(b * d, (b + 1) * d, d, d) = v_dag;
    }
    return ext;
}

double fold_quasi_energy(double value, double w) {
    double r = std::fmod(value, w);  // (-w, w)
    if (r > 0.5 * w) r -= w;
    if (r <= -0.5 * w) r += w;
    return r;
}

FloquetStates floquet_states(const EnsembleSpec& spec, const DrivePulse& pulse, int m_max) {
    return solve_states(drive_pieces(spec, pulse), pulse.carrier, m_max);
}

FloquetSpectrum quasi_energies(const EnsembleSpec& spec, const DrivePulse& pulse, const FloquetOptions& options) {
    if (options.m_max < 2) throw ConfigError("quasi_energies needs m_max >= 2");
    const Pieces p = drive_pieces(spec, pulse);
    const double w = pulse.carrier;

    FloquetSpectrum spectrum;
    spectrum.drive_freq = w;
    int m_max = options.m_max;
    for (int attempt = 0;; ++attempt) {
        const std::vector<double> hi = folded(solve_states(p, w, m_max));
        const std::vector<double> lo = folded(solve_states(p, w, m_max - 1));
        spectrum.harmonics = m_max;
        spectrum.quasi_energies = hi;
        spectrum.convergence_error = matched_error(hi, lo, w);
        spectrum.converged = spectrum.convergence_error <= options.tolerance;
        if (spectrum.converged) return spectrum;
        if (attempt >= options.max_doublings) break;
        m_max *= 2;
    }
    std::ostringstream os;
    os << "Floquet quasi-energies did not converge at drive " << w << " Hz: error "
       << spectrum.convergence_error << " Hz with m_max = " << spectrum.harmonics;
    throw NumericError(os.str());
}

CMatrix floquet_dipole(const FloquetStates& states, const CMatrix& polarization, int m) {
    const auto d = static_cast<Eigen::Index>(states.dim);
    const auto blocks = 2 * static_cast<Eigen::Index>(states.m_max) + 1;
    const auto count = static_cast<Eigen::Index>(states.modes.size());
    CMatrix out = CMatrix::Zero(count, count);
    for (Eigen::Index b = 0; b < count; ++b) {
        const CVector& ub = states.modes[static_cast<std::size_t>(b)];
        // P applied blockwise to u_b
        CVector pu(ub.size());
        for (Eigen::Index k = 0; k < blocks; ++k) pu.segment(k * d, d) = polarization * ub.segment(k * d, d);
        for (Eigen::Index a = 0; a < count; ++a) {
            const CVector& ua = states.modes[static_cast<std::size_t>(a)];
            cplx acc(0.0, 0.0);
            // sum_k <u_a^{k+m}| P |u_b^k>
            for (Eigen::Index k = 0; k < blocks; ++k) {
                const Eigen::Index km = k + m;
                if (km < 0 || km >= blocks) continue;
                acc += ua.segment(km * d, d).dot(pu.segment(k * d, d));
            }
            out(a, b) = acc;
        }
    }
    return out;
}

FloquetResponse floquet_response(const EnsembleSpec& spec, const DrivePulse& pulse, int m_max,
                                 const std::vector<double>& omega_grid, double eta, int n, int m) {
    if (!(eta > 0.0)) throw ConfigError("floquet_response needs eta > 0");
    if (m_max < 1) throw ConfigError("floquet_response needs m_max >= 1");
    const Pieces p = drive_pieces(spec, pulse);
    const double w = pulse.carrier;
    const FloquetStates states = solve_states(p, w, m_max);

    // d^l for every l needed: l in [-m_max, m_max] and m - n - l in range
    std::vector<CMatrix> dip(static_cast<std::size_t>(4 * m_max + 1));
    auto dipole_at = [&](int l) -> const CMatrix& {
        auto& slot = dip[static_cast<std::size_t>(l + 2 * m_max)];
        if (slot.size() == 0) slot = floquet_dipole(states, p.polarization, l);
        return slot;
    };

    struct Pole {
        double freq;
        cplx residue;
    };
    std::vector<Pole> poles;
    const auto count = static_cast<Eigen::Index>(states.energies.size());
    for (int l = -m_max; l <= m_max; ++l) {
        const int other = m - n - l;
        if (other < -2 * m_max || other > 2 * m_max) continue;
        const CMatrix& dl = dipole_at(l);
        const CMatrix& dr = dipole_at(other);
        for (Eigen::Index a = 0; a < count; ++a) {
            for (Eigen::Index b = 0; b < count; ++b) {
                const cplx residue = dl(a, b) * dr(b, a);
                const double freq = states.energies[static_cast<std::size_t>(a)] -
                                    states.energies[static_cast<std::size_t>(b)] + l * w;
                poles.push_back({freq, residue});
            }
        }
    }

    FloquetResponse out;
    out.omega_grid = omega_grid;
    out.eta = eta;
    out.n = n;
    out.m = m;
    out.chi.assign(omega_grid.size(), cplx(0.0, 0.0));
    for (std::size_t i = 0; i < omega_grid.size(); ++i) {
        cplx acc(0.0, 0.0);
        for (const Pole& pole : poles) acc += pole.residue / cplx(omega_grid[i] - pole.freq, eta);
        out.chi[i] = acc;
    }

    double max_residue = 0.0;
    for (const Pole& pole : poles) max_residue = std::max(max_residue, std::abs(pole.residue));
    std::vector<double> significant;
    for (const Pole& pole : poles) {
        if (std::abs(pole.residue) > 1e-10 * max_residue) significant.push_back(pole.freq);
    }
    std::sort(significant.begin(), significant.end());
    const double merge = 1e-9 * std::max(1.0, w);
    for (double f : significant) {
        if (out.poles.empty() || std::abs(f - out.poles.back()) > merge) out.poles.push_back(f);
    }
    return out;
}

FloquetSweep floquet_sweep(const EnsembleSpec& spec, const DrivePulse& pulse_template,
                           const std::vector<double>& drive_freq, const FloquetOptions& options, std::size_t workers) {
    if (drive_freq.empty()) throw ConfigError("floquet_sweep needs at least one drive frequency");
    for (std::size_t i = 1; i < drive_freq.size(); ++i) {
        if (!(drive_freq[i] > drive_freq[i - 1])) throw ConfigError("floquet_sweep frequencies must increase");
    }
    const std::size_t rows = drive_freq.size();
    const auto dim = static_cast<Eigen::Index>(spec.dim());
    FloquetSweep out;
    out.drive_freq = drive_freq;
    out.quasi_energies = RMatrix::Zero(static_cast<Eigen::Index>(rows), dim);
    out.convergence_error.assign(rows, 0.0);
    out.harmonics.assign(rows, 0.0);

    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    std::size_t failed = rows;
    std::string message;
    auto work = [&]() {
        for (std::size_t i = next.fetch_add(1); i < rows; i = next.fetch_add(1)) {
            try {
                DrivePulse pulse = pulse_template;
                pulse.carrier = drive_freq[i];
                const FloquetSpectrum s = quasi_energies(spec, pulse, options);
                for (Eigen::Index k = 0; k < dim; ++k)
                    out.quasi_energies(static_cast<Eigen::Index>(i), k) = s.quasi_energies[static_cast<std::size_t>(k)];
                out.convergence_error[i] = s.convergence_error;
                out.harmonics[i] = s.harmonics;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (i < failed) {
                    failed = i;
                    message = e.what();
                }
            }
        }
    };
    const std::size_t n = std::max<std::size_t>(1, std::min(workers, rows));
    if (n == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failed < rows) {
        std::ostringstream os;
        os << "floquet sweep point " << failed << " (drive " << drive_freq[failed] << " Hz): " << message;
        throw NumericError(os.str());
    }
    out.metadata = {{"m_max", options.m_max},
                    {"tolerance_hz", options.tolerance},
                    {"max_doublings", options.max_doublings},
                    {"amplitude_hz", pulse_template.effective_amplitude()}};
    return out;
}

}  // namespace tlsspec
