// analysis.hpp — post-processing of simulated or measured transient traces:
// homodyne amplitude, ring-down spectra, intensity correlations, chi'',
// lifetime fits and map arithmetic.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tlsspec/core.hpp"

namespace tlsspec {

enum class TraceKind { iq, amplitude, intensity };

std::string to_string(TraceKind kind);

struct TimeTrace {
    double t0{0.0};
    double dt{1.0};
    TraceKind kind{TraceKind::amplitude};
    std::vector<cplx> iq;        // used when kind == iq
    std::vector<double> values;  // used otherwise

    std::size_t size() const { return kind == TraceKind::iq ? iq.size() : values.size(); }
    double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    void validate() const;
};

enum class ColumnAxis { time, frequency };
enum class MapScale { linear, log_magnitude };

struct Spectrogram {
    std::vector<double> row_axis;  // drive frequency, Hz
    std::vector<double> col_axis;  // s or Hz
    ColumnAxis col_kind{ColumnAxis::time};
    RMatrix values;
    MapScale scale{MapScale::linear};
    std::optional<std::size_t> pulse_off_index;
    std::string quantity{"population"};
    nlohmann::json metadata = nlohmann::json::object();

    std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
    void validate() const;
};

struct CorrelationMap {
    std::vector<double> row_axis;   // drive frequency, Hz
    std::vector<double> lag_axis;   // s, starts at 0
    RMatrix g2;
    RMatrix correlation;            // unnormalized <I(t) I(t+lag)>
    std::vector<bool> masked;       // rows whose mean intensity is below the noise floor
    std::vector<double> omega_axis; // Hz, filled by chi_imag
    std::optional<RMatrix> chi_imag;
    nlohmann::json metadata = nlohmann::json::object();

    void validate() const;
};

struct Series {
    std::vector<double> axis;
    std::string axis_name{"drive_frequency"};
    std::string axis_unit{"Hz"};
    std::vector<double> values;
    std::string name;
    nlohmann::json metadata = nlohmann::json::object();
};

TimeTrace homodyne_amplitude(const TimeTrace& trace);
TimeTrace intensity(const TimeTrace& trace);

enum class FftWindow { post_pulse, full };

struct FftOptions {
    bool hann{true};
    bool subtract_mean{true};
    std::size_t pad_factor{4};  // zero-pad to the next power of two >= pad_factor * length
};

// log-magnitude floor relative to the map maximum
inline constexpr double kLogFloor = 1e-6;

Spectrogram log_magnitude(const Spectrogram& map);

Spectrogram ringdown_fft(const Spectrogram& map, FftWindow window, bool log_input,
                         const FftOptions& options = {});

struct G2Options {
    // rows with <I>^2 below floor * (largest row <I>^2) are masked
    double noise_floor{1e-12};
};

CorrelationMap g2_map(const Spectrogram& map, double max_lag, FftWindow window = FftWindow::post_pulse,
                      const G2Options& options = {});

enum class ChiMode { one_sided, two_sided_even };

struct ChiOptions {
    ChiMode mode{ChiMode::one_sided};
    std::size_t pad_factor{4};
};

// chi''(f) = Im sum_k w_k e^{i 2 pi f lag_k} C(lag_k) dlag; positive f only.
CorrelationMap chi_imag(const CorrelationMap& corr, const ChiOptions& options = {});

// Tapering applied to the correlation before transforming: cos^2 half-Hann
// from 1 at lag 0 to 0 at max lag (one-sided), full Hann when mirrored.
double chi_window(double lag, double max_lag);

struct ZeroCrossing {
    double drive_freq;  // Hz
    double omega;       // Hz
};

std::vector<ZeroCrossing> chi_zero_crossings(const CorrelationMap& corr);

struct LifetimeFit {
    double tau;         // s
    double amplitude;   // envelope prefactor at t = 0
    double residual;    // RMS of the log-space residual
    std::size_t samples;
};

struct LifetimeOptions {
    double envelope_width{0.0};  // s; moving-maximum window, 0 uses the raw samples
    double floor{0.0};           // subtracted from the envelope before the log
};

LifetimeFit fit_lifetime(const TimeTrace& trace, double t_start, double t_stop,
                         const LifetimeOptions& options = {});

// Root of sin x = x / 2 on (pi/2, pi), found by bisection.
double rect_half_power_root();

// FWHM of |sinc| for a rectangular pulse of the given duration, Hz.
double pulse_bandwidth(double duration);

Spectrogram diff_map(const Spectrogram& a, const Spectrogram& b);

Series mean_driven_response(const Spectrogram& map);

// Index of the largest value of `values` whose axis coordinate lies in [lo, hi].
std::optional<std::size_t> peak_in_range(const std::vector<double>& axis, const std::vector<double>& values,
                                         double lo, double hi);

// Full width at half maximum around `peak`, linearly interpolated. Returns
// nullopt when the profile does not fall to half maximum on both sides.
std::optional<double> full_width_half_max(const std::vector<double>& axis, const std::vector<double>& values,
                                          std::size_t peak);

std::vector<double> row_values(const Spectrogram& map, std::size_t row);
std::vector<double> column_values(const Spectrogram& map, std::size_t col);

// Time-domain rows of a spectrogram as traces.
TimeTrace row_trace(const Spectrogram& map, std::size_t row, TraceKind kind = TraceKind::amplitude);

}  // namespace tlsspec
