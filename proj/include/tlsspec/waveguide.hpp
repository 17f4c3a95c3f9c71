// waveguide.hpp — ideal rectangular-waveguide modes and drive flattening

#pragma once

#include <vector>

#include "tlsspec/model.hpp"

namespace tlsspec {

struct WaveguideGeometry {
    double a{0.0};  // width, m
    double b{0.0};  // height, m

    void validate() const;
};

struct ModeCutoff {
    int m;
    int n;
    double cutoff;  // Hz
};

// Every (m, n) with 0 <= m <= m_max, 0 <= n <= n_max except (0, 0),
// ascending by cutoff (ties by m, then n).
std::vector<ModeCutoff> mode_cutoffs(const WaveguideGeometry& geom, int m_max, int n_max);

double cutoff_wavenumber(const WaveguideGeometry& geom, int m, int n);  // rad/m

struct Propagation {
    double beta;      // rad/m; |beta| below cutoff
    bool evanescent;
};

Propagation propagation_constant(const WaveguideGeometry& geom, double f, int m, int n);

struct FieldProfile {
    std::vector<double> freq;        // Hz, strictly increasing
    std::vector<double> mean_field;  // > 0
    double target{1.0};

    void validate() const;
};

GainTable flatten_gain(const FieldProfile& profile);

// mean_field scaled by the gain interpolated at each profile frequency.
FieldProfile apply_gain(const FieldProfile& profile, const GainTable& gain);

}  // namespace tlsspec
