#include "tlsspec/waveguide.hpp"

#include <algorithm>
#include <cmath>

namespace tlsspec {

void WaveguideGeometry::validate() const {
    if (!std::isfinite(a) || !std::isfinite(b) || !(b > 0.0) || a < b)
        throw ConfigError("waveguide geometry needs a >= b > 0");
}

double cutoff_wavenumber(const WaveguideGeometry& geom, int m, int n) {
    geom.validate();
    if (m < 0 || n < 0) throw ConfigError("mode indices must be non-negative");
    return std::hypot(m * kPi / geom.a, n * kPi / geom.b);
}

namespace {

double cutoff_frequency(double kc) { return kc * kSpeedOfLight / kTwoPi; }

}  // namespace

std::vector<ModeCutoff> mode_cutoffs(const WaveguideGeometry& geom, int m_max, int n_max) {
    geom.validate();
    if (m_max < 1 || n_max < 1) throw ConfigError("mode_cutoffs needs m_max, n_max >= 1");
    std::vector<ModeCutoff> modes;
    for (int m = 0; m <= m_max; ++m) {
        for (int n = 0; n <= n_max; ++n) {
            if (m == 0 && n == 0) continue;
            modes.push_back({m, n, cutoff_frequency(cutoff_wavenumber(geom, m, n))});
        }
    }
    std::stable_sort(modes.begin(), modes.end(), [](const ModeCutoff& x, const ModeCutoff& y) {
        return x.cutoff < y.cutoff;
    });
    return modes;
}

Propagation propagation_constant(const WaveguideGeometry& geom, double f, int m, int n) {
    if (!(f > 0.0)) throw ConfigError("propagation_constant needs f > 0");
    if (m == 0 && n == 0) throw ConfigError("TE00 is not a waveguide mode");
    const double kc = cutoff_wavenumber(geom, m, n);
    // beta = kc sqrt((f/fc)^2 - 1), so the reported cutoff gives exactly zero
    const double x = f / cutoff_frequency(kc);
    const double diff = (x - 1.0) * (x + 1.0);
    if (diff >= 0.0) return {kc * std::sqrt(diff), false};
    return {kc * std::sqrt(-diff), true};
}

void FieldProfile::validate() const {
    if (freq.empty() || freq.size() != mean_field.size())
        throw ConfigError("field profile needs matching, non-empty columns");
    for (std::size_t i = 0; i < freq.size(); ++i) {
        if (!std::isfinite(freq[i]) || !std::isfinite(mean_field[i]))
            throw ConfigError("field profile entries must be finite");
        if (mean_field[i] <= 0.0) throw ConfigError("field profile values must be > 0");
        if (i > 0 && freq[i] <= freq[i - 1]) throw ConfigError("field profile frequencies must increase");
    }
    if (!(target > 0.0) || !std::isfinite(target)) throw ConfigError("field profile target must be > 0");
}

GainTable flatten_gain(const FieldProfile& profile) {
    profile.validate();
    GainTable gain;
    gain.freq = profile.freq;
    gain.scale.reserve(profile.freq.size());
    for (double field : profile.mean_field) gain.scale.push_back(profile.target / field);
    return gain;
}

FieldProfile apply_gain(const FieldProfile& profile, const GainTable& gain) {
    profile.validate();
    gain.validate();
    FieldProfile out = profile;
    for (std::size_t i = 0; i < out.freq.size(); ++i) out.mean_field[i] *= gain.at(out.freq[i]);
    return out;
}

}  // namespace tlsspec
