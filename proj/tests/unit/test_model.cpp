#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "tlsspec/model.hpp"

using namespace tlsspec;

namespace {

// Kronecker product written out element by element.
CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index k = 0; k < b.rows(); ++k)
                for (Eigen::Index l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return out;
}

CMatrix mat2(cplx a, cplx b, cplx c, cplx d) {
    CMatrix m(2, 2);
    m << a, b, c, d;
    return m;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("mixing angle and splitting") {
    const Splitting s = tls_splitting({3.0e9, 4.0e9, 1.0});
    CHECK(s.energy == doctest::Approx(5.0e9));
    CHECK(s.theta == doctest::Approx(std::atan2(4.0, 3.0)));
    CHECK(tls_splitting({2.0e9, 0.0, 1.0}).theta == 0.0);
    CHECK(tls_splitting({0.0, 2.0e9, 1.0}).theta == doctest::Approx(kPi / 2));
    CHECK_THROWS_AS(tls_splitting({0.0, 0.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(tls_splitting({1.0, -1.0, 1.0}), ConfigError);
}

TEST_CASE("Pauli operators follow the excited-first convention") {
    using namespace pauli;
    const CMatrix z = sigma_z();
    CHECK(z(0, 0) == cplx(1, 0));
    CHECK(z(1, 1) == cplx(-1, 0));
    // sigma_+ = |e><g| raises g (index 1) to e (index 0)
    CHECK(sigma_plus()(0, 1) == cplx(1, 0));
    CHECK((sigma_plus() * sigma_minus() - 0.5 * (CMatrix::Identity(2, 2) + z)).norm() < 1e-15);
    CHECK((sigma_x() * sigma_y() - cplx(0, 1) * z).norm() < 1e-15);
}

TEST_CASE("embedding places site 0 as the most significant factor") {
    const CMatrix id = CMatrix::Identity(2, 2);
    const CMatrix x = pauli::sigma_x();
    CHECK((pauli::embed(x, 0, 3) - kron(kron(x, id), id)).norm() == 0.0);
    CHECK((pauli::embed(x, 2, 3) - kron(kron(id, id), x)).norm() == 0.0);
    CHECK_THROWS_AS(pauli::embed(x, 3, 3), ConfigError);
}

TEST_CASE("static Hamiltonian matches an explicit Kronecker construction") {
    EnsembleSpec spec;
    spec.defects = {{1.0e9, 3.0e9, 1.0}, {0.0, 4.5e9, 0.7}};
    spec.couplings = RMatrix::Zero(2, 2);
    spec.couplings(0, 1) = spec.couplings(1, 0) = 50e6;
    const CMatrix id = CMatrix::Identity(2, 2);
    const CMatrix z = mat2(1, 0, 0, -1);
    const CMatrix x = mat2(0, 1, 1, 0);
    const double e1 = std::hypot(1.0e9, 3.0e9), e2 = 4.5e9;
    const CMatrix want = kTwoPi * (0.5 * e1 * kron(z, id) + 0.5 * e2 * kron(id, z) + 50e6 * kron(x, x));
    const OperatorMatrix h = build_static_hamiltonian(spec);
    CHECK(h.hermitian);
    CHECK((h.entries - want).norm() / want.norm() < 1e-15);

    const double t1 = std::atan2(3.0e9, 1.0e9);
    const CMatrix pwant = kron(std::cos(t1) * z + std::sin(t1) * x, id) + 0.7 * kron(id, x);
    const OperatorMatrix p = build_polarization_operator(spec);
    CHECK((p.entries - pwant).norm() < 1e-14);
}

TEST_CASE("collective jump operators and driven Hamiltonian") {
    const EnsembleSpec spec = testing::pair(4e9, 4.2e9, 10e6, 1e6);
    const JumpOperators j = build_collective_jump_operators(spec);
    const CMatrix id = CMatrix::Identity(2, 2);
    const CMatrix sm = pauli::sigma_minus();
    CHECK((j.s_minus.entries - (kron(sm, id) + kron(id, sm))).norm() == 0.0);
    CHECK((j.s_plus.entries - j.s_minus.entries.adjoint()).norm() == 0.0);

    const DrivePulse p = testing::pulse(4e9, 100e6, 10e-9);
    const double t = 1.3e-10;
    const CMatrix want = build_static_hamiltonian(spec).entries -
                         kTwoPi * 100e6 * std::cos(kTwoPi * 4e9 * t) * build_polarization_operator(spec).entries;
    CHECK((driven_hamiltonian_at(spec, p, t).entries - want).norm() / want.norm() < 1e-14);
    // drive switched off after the pulse
    CHECK((driven_hamiltonian_at(spec, p, 11e-9).entries - build_static_hamiltonian(spec).entries).norm() == 0.0);
}

TEST_CASE("drive field and gain table") {
    DrivePulse p = testing::pulse(4e9, 100e6, 20e-9);
    CHECK(p.field(0.0) == doctest::Approx(100e6));
    CHECK(p.field(25e-9) == 0.0);
    CHECK_THROWS_AS(p.field(-1e-9), ConfigError);
    p.gain_table = GainTable{{3e9, 5e9}, {1.0, 3.0}};
    CHECK(p.effective_amplitude() == doctest::Approx(200e6));
    CHECK(p.gain_table->at(1e9) == 1.0);
    CHECK(p.gain_table->at(9e9) == 3.0);
    p.gain_table = GainTable{{3e9, 5e9}, {1.0, -1.0}};
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("ensemble validation") {
    EnsembleSpec spec = testing::pair(4e9, 4.2e9, 10e6, 1e6);
    CHECK_NOTHROW(spec.validate());
    spec.couplings(0, 1) = 5e6;
    CHECK_THROWS_AS(spec.validate(), ConfigError);  // asymmetric
    spec = testing::pair(4e9, 4.2e9, 10e6, -1.0);
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = testing::single(4e9);
    spec.defects.resize(9, {0.0, 4e9, 1.0});
    CHECK_THROWS_AS(spec.validate(), ConfigError);  // above the default cap of 8
    spec.max_defects = 9;
    CHECK_NOTHROW(spec.validate());
}

TEST_CASE("disorder sampling is seeded, bounded and keeps the mixing angle") {
    EnsembleSpec spec;
    spec.defects.assign(4, {0.0, 4e9, 1.0});
    spec.gamma = 1e6;
    spec.disorder = DisorderSpec{{3.0e9, 5.0e9}, {-50e6, 50e6}, 1234};
    const EnsembleSpec a = sample_disorder(spec);
    const EnsembleSpec b = sample_disorder(spec);
    CHECK(!a.disorder);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.defects[i].delta == b.defects[i].delta);
        CHECK(a.defects[i].epsilon == 0.0);
        CHECK(a.defects[i].delta >= 3.0e9);
        CHECK(a.defects[i].delta <= 5.0e9);
    }
    CHECK((a.couplings - a.couplings.transpose()).norm() == 0.0);
    CHECK(a.couplings.diagonal().norm() == 0.0);
    CHECK(a.couplings.cwiseAbs().maxCoeff() <= 50e6);
    spec.disorder->seed = 1235;
    CHECK(sample_disorder(spec).defects[0].delta != a.defects[0].delta);

    // longitudinal template: drawn value lands on epsilon
    spec.defects.assign(4, {4e9, 0.0, 1.0});
    const EnsembleSpec c = sample_disorder(spec);
    CHECK(c.defects[0].delta == 0.0);
    CHECK(c.defects[0].epsilon >= 3.0e9);
}

TEST_CASE("bare transition frequencies") {
    const auto f1 = bare_transition_frequencies(testing::single(4.25e9));
    REQUIRE(f1.size() == 1);
    CHECK(f1[0] == doctest::Approx(4.25e9).epsilon(1e-14));
    const auto f2 = bare_transition_frequencies(testing::pair(3.5e9, 4.5e9, 0.0, 0.0));
    REQUIRE(f2.size() == 3);
    CHECK(f2[0] == doctest::Approx(3.5e9));
    CHECK(f2[1] == doctest::Approx(4.5e9));
    CHECK(f2[2] == doctest::Approx(8.0e9));
}

}  // TEST_SUITE
