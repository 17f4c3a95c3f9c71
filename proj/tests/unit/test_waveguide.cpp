#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tlsspec/waveguide.hpp"

using namespace tlsspec;

namespace {

const WaveguideGeometry kWr229{58.17e-3, 29.08e-3};

}  // namespace

TEST_SUITE("waveguide") {

TEST_CASE("WR-229 fundamental cutoff") {
    const auto modes = mode_cutoffs(kWr229, 3, 3);
    REQUIRE(!modes.empty());
    CHECK(modes[0].m == 1);
    CHECK(modes[0].n == 0);
    CHECK(modes[0].cutoff == doctest::Approx(kSpeedOfLight / (2 * 58.17e-3)).epsilon(1e-14));
    CHECK(std::abs(modes[0].cutoff - 2.577e9) < 0.5e6);
}

TEST_CASE("cutoff scaling and ordering") {
    const auto modes = mode_cutoffs(kWr229, 4, 3);
    CHECK(modes.size() == 5 * 4 - 1);
    double te10 = 0.0, te20 = 0.0;
    for (const auto& m : modes) {
        CHECK(!(m.m == 0 && m.n == 0));
        if (m.m == 1 && m.n == 0) te10 = m.cutoff;
        if (m.m == 2 && m.n == 0) te20 = m.cutoff;
    }
    CHECK(te20 == 2.0 * te10);
    for (std::size_t i = 1; i < modes.size(); ++i) CHECK(modes[i].cutoff >= modes[i - 1].cutoff);
    // monotone in each index separately
    for (int n = 0; n <= 3; ++n)
        for (int m = 1; m <= 4; ++m)
            CHECK(cutoff_wavenumber(kWr229, m, n) >= cutoff_wavenumber(kWr229, m - 1, n));
    for (int m = 0; m <= 4; ++m)
        for (int n = 1; n <= 3; ++n)
            CHECK(cutoff_wavenumber(kWr229, m, n) >= cutoff_wavenumber(kWr229, m, n - 1));
}

TEST_CASE("propagation constant") {
    const double fc = mode_cutoffs(kWr229, 1, 1)[0].cutoff;
    const Propagation at = propagation_constant(kWr229, fc, 1, 0);
    CHECK(at.beta == 0.0);
    CHECK(!at.evanescent);

    for (double f : {3e9, 4.5e9, 8e9}) {
        const Propagation p = propagation_constant(kWr229, f, 1, 0);
        const double k = kTwoPi * f / kSpeedOfLight;
        const double kc = cutoff_wavenumber(kWr229, 1, 0);
        CHECK(!p.evanescent);
        CHECK(std::abs(p.beta * p.beta + kc * kc - k * k) < 1e-12 * k * k);
    }
    const double f_big = 1e13;
    const double k_big = kTwoPi * f_big / kSpeedOfLight;
    CHECK(propagation_constant(kWr229, f_big, 1, 0).beta == doctest::Approx(k_big).epsilon(1e-6));

    // 2 GHz is below the TE10 cutoff: |beta| = k_c sqrt(1 - (f / f_c)^2)
    const Propagation ev = propagation_constant(kWr229, 2e9, 1, 0);
    CHECK(ev.evanescent);
    const double want = kPi / 58.17e-3 * std::sqrt(1.0 - std::pow(2e9 / fc, 2));
    CHECK(ev.beta == doctest::Approx(want).epsilon(1e-12));
    CHECK(std::isfinite(1.0 / ev.beta));
    CHECK_THROWS_AS(propagation_constant(kWr229, 0.0, 1, 0), ConfigError);
    CHECK_THROWS_AS(propagation_constant(kWr229, 3e9, 0, 0), ConfigError);
}

TEST_CASE("geometry validation") {
    CHECK_THROWS_AS(mode_cutoffs({10e-3, 20e-3}, 1, 1), ConfigError);
    CHECK_THROWS_AS(mode_cutoffs({10e-3, 0.0}, 1, 1), ConfigError);
    CHECK_THROWS_AS(mode_cutoffs(kWr229, 0, 1), ConfigError);
}

TEST_CASE("gain flattening") {
    FieldProfile p{{3e9, 4e9, 5e9}, {1.0, 2.0, 4.0}, 1.0};
    const GainTable g = flatten_gain(p);
    CHECK(g.freq == p.freq);
    CHECK(g.scale == std::vector<double>{1.0, 0.5, 0.25});

    FieldProfile wavy{{3e9, 3.5e9, 4e9, 4.5e9, 5e9}, {0.7, 1.3, 2.9, 0.4, 1.1}, 2.5};
    const FieldProfile flat = apply_gain(wavy, flatten_gain(wavy));
    const auto [lo, hi] = std::minmax_element(flat.mean_field.begin(), flat.mean_field.end());
    CHECK(std::abs(*hi / *lo - 1.0) < 1e-12);
    CHECK(flat.mean_field[0] == doctest::Approx(2.5));
    // re-flattening a flat profile at its own level gives unit gains
    FieldProfile again = flat;
    again.target = flat.mean_field[0];
    for (double s : flatten_gain(again).scale) CHECK(std::abs(s - 1.0) < 1e-12);

    const GainTable constant = flatten_gain({{3e9, 4e9}, {2.0, 2.0}, 1.0});
    CHECK(constant.scale[0] == constant.scale[1]);

    CHECK_THROWS_AS(flatten_gain({{3e9, 4e9}, {1.0, 0.0}, 1.0}), ConfigError);
    CHECK_THROWS_AS(flatten_gain({{4e9, 3e9}, {1.0, 1.0}, 1.0}), ConfigError);
}

TEST_CASE("gain interpolation between profile points") {
    const GainTable g{{3e9, 5e9}, {1.0, 0.5}};
    CHECK(g.at(4e9) == doctest::Approx(0.75));
    DrivePulse pulse;
    pulse.carrier = 4e9;
    pulse.amplitude = 100e6;
    pulse.duration = 1e-8;
    pulse.gain_table = g;
    CHECK(pulse.effective_amplitude() == doctest::Approx(75e6));
}

}  // TEST_SUITE
