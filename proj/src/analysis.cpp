#include "tlsspec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tlsspec/spectral.hpp"

namespace tlsspec {

namespace {

bool strictly_increasing(const std::vector<double>& axis) {
    for (std::size_t i = 1; i < axis.size(); ++i) {
        if (!(axis[i] > axis[i - 1])) return false;
    }
    return true;
}

double uniform_step(const std::vector<double>& axis, const char* what) {
    if (axis.size() < 2) {
        std::ostringstream os;
        os << what << ": need at least two samples";
        throw ConfigError(os.str());
    }
    const double step = axis[1] - axis[0];
    for (std::size_t i = 2; i < axis.size(); ++i) {
        if (std::abs((axis[i] - axis[i - 1]) - step) > 1e-6 * step) {
            std::ostringstream os;
            os << what << ": column axis is not uniform";
            throw ConfigError(os.str());
        }
    }
    return step;
}

std::pair<std::size_t, std::size_t> window_columns(const Spectrogram& map, FftWindow window, const char* what) {
    if (window == FftWindow::full) return {0, map.cols()};
    if (!map.pulse_off_index) {
        std::ostringstream os;
        os << what << ": post-pulse window requires a pulse-off index";
        throw ConfigError(os.str());
    }
    const std::size_t start = *map.pulse_off_index;
    if (start >= map.cols()) throw ConfigError(std::string(what) + ": pulse-off index beyond the map");
    return {start, map.cols()};
}

}  // namespace

std::string to_string(TraceKind kind) {
    switch (kind) {
        case TraceKind::iq: return "iq";
        case TraceKind::amplitude: return "amplitude";
        case TraceKind::intensity: return "intensity";
    }
    return "unknown";
}

void TimeTrace::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("trace dt must be > 0");
    if (kind == TraceKind::iq) {
        if (!values.empty()) throw ConfigError("IQ trace must not carry real samples");
        for (const cplx& v : iq) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw ConfigError("trace samples must be finite");
        }
    } else {
        if (!iq.empty()) throw ConfigError("real trace must not carry IQ samples");
        for (double v : values) {
            if (!std::isfinite(v)) throw ConfigError("trace samples must be finite");
        }
    }
}

void Spectrogram::validate() const {
    if (values.rows() != static_cast<Eigen::Index>(row_axis.size()) ||
        values.cols() != static_cast<Eigen::Index>(col_axis.size()))
        throw ConfigError("spectrogram dimensions do not match its axes");
    if (!strictly_increasing(row_axis) || !strictly_increasing(col_axis))
        throw ConfigError("spectrogram axes must be strictly increasing");
    if (pulse_off_index && *pulse_off_index > col_axis.size())
        throw ConfigError("pulse-off index beyond the column axis");
}

void CorrelationMap::validate() const {
    if (g2.rows() != static_cast<Eigen::Index>(row_axis.size()) ||
        g2.cols() != static_cast<Eigen::Index>(lag_axis.size()))
        throw ConfigError("correlation map dimensions do not match its axes");
    if (correlation.rows() != g2.rows() || correlation.cols() != g2.cols())
        throw ConfigError("raw correlation shape differs from g2");
    if (!lag_axis.empty() && lag_axis.front() != 0.0) throw ConfigError("lag axis must start at 0");
    if (masked.size() != row_axis.size()) throw ConfigError("mask length differs from the row axis");
    if (chi_imag) {
        if (chi_imag->rows() != g2.rows() || chi_imag->cols() != static_cast<Eigen::Index>(omega_axis.size()))
            throw ConfigError("chi'' dimensions do not match its axes");
    }
}

TimeTrace homodyne_amplitude(const TimeTrace& trace) {
    if (trace.kind != TraceKind::iq) throw ConfigError("homodyne_amplitude expects an IQ trace");
    TimeTrace out{trace.t0, trace.dt, TraceKind::amplitude, {}, {}};
    out.values.reserve(trace.iq.size());
    for (const cplx& s : trace.iq) out.values.push_back(std::hypot(s.real(), s.imag()));
    return out;
}

TimeTrace intensity(const TimeTrace& trace) {
    if (trace.kind != TraceKind::amplitude) throw ConfigError("intensity expects an amplitude trace");
    TimeTrace out{trace.t0, trace.dt, TraceKind::intensity, {}, {}};
    out.values.reserve(trace.values.size());
    for (double a : trace.values) out.values.push_back(a * a);
    return out;
}

Spectrogram log_magnitude(const Spectrogram& map) {
    map.validate();
    Spectrogram out = map;
    const double floor = kLogFloor * map.values.cwiseAbs().maxCoeff();
    out.values = (map.values.cwiseAbs().array() + floor).log10().matrix();
    out.scale = MapScale::log_magnitude;
    out.metadata["log_floor"] = floor;
    return out;
}

Spectrogram ringdown_fft(const Spectrogram& map, FftWindow window, bool log_input, const FftOptions& options) {
    map.validate();
    if (map.col_kind != ColumnAxis::time) throw ConfigError("ringdown_fft expects a time-domain map");
    const double dt = uniform_step(map.col_axis, "ringdown_fft");
    const auto [start, stop] = window_columns(map, window, "ringdown_fft");
    const std::size_t length = stop - start;
    if (length < 2) throw ConfigError("ringdown_fft: window holds fewer than two samples");
    const std::size_t n = spectral::next_pow2(std::max<std::size_t>(1, options.pad_factor) * length);
    const std::vector<double> taper = options.hann ? spectral::hann(length) : std::vector<double>(length, 1.0);
    const double floor = kLogFloor * map.values.cwiseAbs().maxCoeff();

    Spectrogram out;
    out.row_axis = map.row_axis;
    out.col_kind = ColumnAxis::frequency;
    out.col_axis.resize(n / 2 + 1);
    for (std::size_t k = 0; k < out.col_axis.size(); ++k)
        out.col_axis[k] = static_cast<double>(k) / (static_cast<double>(n) * dt);
    out.values = RMatrix::Zero(map.values.rows(), static_cast<Eigen::Index>(out.col_axis.size()));
    out.quantity = "fft_magnitude(" + map.quantity + ")";
    out.metadata = map.metadata;
    out.metadata["fft"] = {{"source_quantity", map.quantity},
                    {"window", window == FftWindow::full ? "full" : "post_pulse"},
                    {"log_input", log_input},
                    {"log_floor", log_input ? floor : 0.0},
                    {"hann", options.hann},
                    {"subtract_mean", options.subtract_mean},
                    {"fft_length", n},
                    {"first_column", start}};

    std::vector<double> segment(length);
    for (Eigen::Index r = 0; r < map.values.rows(); ++r) {
        for (std::size_t i = 0; i < length; ++i) {
            const double v = map.values(r, static_cast<Eigen::Index>(start + i));
            segment[i] = log_input ? std::log10(std::abs(v) + floor) : v;
        }
        if (options.subtract_mean) {
            const double mean = std::accumulate(segment.begin(), segment.end(), 0.0) / static_cast<double>(length);
            for (double& s : segment) s -= mean;
        }
        for (std::size_t i = 0; i < length; ++i) segment[i] *= taper[i];
        const std::vector<cplx> spectrum = spectral::real_forward(segment, n);
        for (std::size_t k = 0; k < spectrum.size(); ++k) out.values(r, static_cast<Eigen::Index>(k)) = std::abs(spectrum[k]);
    }
    return out;
}

CorrelationMap g2_map(const Spectrogram& map, double max_lag, FftWindow window, const G2Options& options) {
    map.validate();
    if (map.col_kind != ColumnAxis::time) throw ConfigError("g2_map expects a time-domain intensity map");
    const double dt = uniform_step(map.col_axis, "g2_map");
    const auto [start, stop] = window_columns(map, window, "g2_map");
    const std::size_t length = stop - start;
    if (!(max_lag >= 0.0)) throw ConfigError("g2_map: max_lag must be >= 0");
    const auto lags = static_cast<std::size_t>(std::floor(max_lag / dt + 1e-9));
    if (lags >= length) throw ConfigError("g2_map: max_lag exceeds the averaging window");
    for (Eigen::Index r = 0; r < map.values.rows(); ++r) {
        for (std::size_t c = start; c < stop; ++c) {
            if (map.values(r, static_cast<Eigen::Index>(c)) < 0.0)
                throw ConfigError("g2_map: intensities must be non-negative");
        }
    }

    CorrelationMap out;
    out.row_axis = map.row_axis;
    out.lag_axis.resize(lags + 1);
    for (std::size_t k = 0; k <= lags; ++k) out.lag_axis[k] = static_cast<double>(k) * dt;
    const auto rows = map.values.rows();
    const auto cols = static_cast<Eigen::Index>(lags + 1);
    out.g2 = RMatrix::Zero(rows, cols);
    out.correlation = RMatrix::Zero(rows, cols);
    out.masked.assign(static_cast<std::size_t>(rows), false);

    std::vector<double> mean_sq(static_cast<std::size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto x = map.values.row(r).segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(length));
        const double mean = x.mean();
        mean_sq[static_cast<std::size_t>(r)] = mean * mean;
        for (std::size_t k = 0; k <= lags; ++k) {
            const auto pairs = static_cast<Eigen::Index>(length - k);
            const double c = x.head(pairs).dot(x.segment(static_cast<Eigen::Index>(k), pairs)) / static_cast<double>(pairs);
            out.correlation(r, static_cast<Eigen::Index>(k)) = c;
        }
    }
    const double largest = mean_sq.empty() ? 0.0 : *std::max_element(mean_sq.begin(), mean_sq.end());
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double m2 = mean_sq[static_cast<std::size_t>(r)];
        if (m2 <= 0.0 || m2 < options.noise_floor * largest) {
            out.masked[static_cast<std::size_t>(r)] = true;
            continue;
        }
        out.g2.row(r) = out.correlation.row(r) / m2;
    }
    out.metadata = map.metadata;
    out.metadata["g2"] = {{"source_quantity", map.quantity},
                    {"window", window == FftWindow::full ? "full" : "post_pulse"},
                    {"max_lag_s", max_lag},
                    {"noise_floor", options.noise_floor},
                    {"first_column", start}};
    return out;
}

double chi_window(double lag, double max_lag) {
    if (max_lag <= 0.0) return 1.0;
    const double c = std::cos(0.5 * kPi * std::abs(lag) / max_lag);
    return c * c;
}

CorrelationMap chi_imag(const CorrelationMap& corr, const ChiOptions& options) {
    corr.validate();
    if (corr.correlation.size() == 0 || corr.lag_axis.size() < 2) throw ConfigError("chi_imag: empty correlation");
    const double dlag = uniform_step(corr.lag_axis, "chi_imag");
    const std::size_t lags = corr.lag_axis.size();
    const double max_lag = corr.lag_axis.back();
    const std::size_t span = options.mode == ChiMode::one_sided ? lags : 2 * lags - 1;
    const std::size_t n = spectral::next_pow2(std::max<std::size_t>(1, options.pad_factor) * span);

    CorrelationMap out = corr;
    out.omega_axis.resize(n / 2 + 1);
    for (std::size_t k = 0; k < out.omega_axis.size(); ++k)
        out.omega_axis[k] = static_cast<double>(k) / (static_cast<double>(n) * dlag);
    RMatrix chi = RMatrix::Zero(corr.correlation.rows(), static_cast<Eigen::Index>(out.omega_axis.size()));

    std::vector<double> seq(n);
    for (Eigen::Index r = 0; r < corr.correlation.rows(); ++r) {
        std::fill(seq.begin(), seq.end(), 0.0);
        for (std::size_t k = 0; k < lags; ++k) {
            const double trap = (k == 0 || k + 1 == lags) ? 0.5 : 1.0;
            const double v = trap * dlag * chi_window(corr.lag_axis[k], max_lag) *
                             corr.correlation(r, static_cast<Eigen::Index>(k));
            if (options.mode == ChiMode::one_sided) {
                seq[k] = v;
            } else {
                // mirror C(-lag) = C(lag); the lag-0 sample is interior, full weight
                const double w = k == 0 ? v / trap : v;
                seq[k] = w;
                if (k > 0) seq[n - k] = w;
            }
        }
        const std::vector<cplx> spectrum = spectral::real_forward(seq, n);
        // sum_k x_k e^{+i 2 pi f lag_k} is the conjugate of the forward DFT
        for (std::size_t j = 0; j < spectrum.size(); ++j) chi(r, static_cast<Eigen::Index>(j)) = -spectrum[j].imag();
    }
    out.chi_imag = std::move(chi);
    out.metadata["chi"] = {{"mode", options.mode == ChiMode::one_sided ? "one_sided" : "two_sided_even"},
                           {"pad_factor", options.pad_factor},
                           {"window", "cos^2 taper, 1 at lag 0, 0 at max lag"},
                           {"fft_length", n}};
    return out;
}

std::vector<ZeroCrossing> chi_zero_crossings(const CorrelationMap& corr) {
    if (!corr.chi_imag) throw ConfigError("chi_zero_crossings: chi'' has not been computed");
    std::vector<ZeroCrossing> out;
    const RMatrix& chi = *corr.chi_imag;
    for (Eigen::Index r = 0; r < chi.rows(); ++r) {
        if (corr.masked[static_cast<std::size_t>(r)]) continue;
        for (Eigen::Index j = 1; j < chi.cols(); ++j) {
            const double a = chi(r, j - 1);
            const double b = chi(r, j);
            if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0)) {
                if (b == 0.0 && j + 1 < chi.cols() && (chi(r, j + 1) > 0.0) == (a > 0.0)) continue;
                const double fa = corr.omega_axis[static_cast<std::size_t>(j - 1)];
                const double fb = corr.omega_axis[static_cast<std::size_t>(j)];
                const double x = fa + (fb - fa) * a / (a - b);
                out.push_back({corr.row_axis[static_cast<std::size_t>(r)], x});
            }
        }
    }
    return out;
}

LifetimeFit fit_lifetime(const TimeTrace& trace, double t_start, double t_stop, const LifetimeOptions& options) {
    trace.validate();
    if (trace.kind == TraceKind::iq) throw ConfigError("fit_lifetime expects a real amplitude trace");
    if (!(t_stop > t_start)) throw ConfigError("fit_lifetime: empty window");
    const double t_last = trace.time(trace.size() == 0 ? 0 : trace.size() - 1);
    if (t_start < trace.t0 - 1e-12 * trace.dt || t_stop > t_last + 1e-9 * trace.dt)
        throw ConfigError("fit_lifetime: window outside the trace");

    const auto first = static_cast<std::size_t>(std::ceil((t_start - trace.t0) / trace.dt - 1e-9));
    const auto last = static_cast<std::size_t>(std::floor((t_stop - trace.t0) / trace.dt + 1e-9));
    const std::size_t count = last >= first ? last - first + 1 : 0;
    if (count < 10) throw ConfigError("fit_lifetime: fewer than 10 samples in the window");

    const auto width = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(options.envelope_width / trace.dt)));
    const std::size_t half = width / 2;
    const std::size_t n = trace.values.size();

    std::vector<double> t(count), y(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t idx = first + i;
        double env = std::abs(trace.values[idx]);
        if (width > 1) {
            const std::size_t lo = idx >= half ? idx - half : 0;
            const std::size_t hi = std::min(n - 1, idx + (width - 1 - half));
            for (std::size_t j = lo; j <= hi; ++j) env = std::max(env, std::abs(trace.values[j]));
        }
        env -= options.floor;
        if (!(env > 0.0)) {
            std::ostringstream os;
            os << "fit_lifetime: non-positive envelope at t = " << trace.time(idx) << " s";
            throw NumericError(os.str());
        }
        t[i] = trace.time(idx);
        y[i] = std::log(env);
    }

    // least squares on centred abscissae
    const double tm = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(count);
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(count);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        sxx += (t[i] - tm) * (t[i] - tm);
        sxy += (t[i] - tm) * (y[i] - ym);
    }
    const double slope = sxy / sxx;
    const double span = t.back() - t.front();
    if (!(slope < 0.0) || std::abs(slope) * span < 1e-9) {
        throw NumericError("fit_lifetime: envelope does not decay (infinite or negative lifetime)");
    }
    const double intercept = ym - slope * tm;
    double ss = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double r = y[i] - (intercept + slope * t[i]);
        ss += r * r;
    }
    return {-1.0 / slope, std::exp(intercept), std::sqrt(ss / static_cast<double>(count)), count};
}

double rect_half_power_root() {
    // f(x) = sin x - x/2 is positive at pi/2 and negative at pi
    double lo = 0.5 * kPi;
    double hi = kPi;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (std::sin(mid) - 0.5 * mid > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double pulse_bandwidth(double duration) {
    if (!(duration > 0.0)) throw ConfigError("pulse_bandwidth needs a positive duration");
    static const double root = rect_half_power_root();
    return 2.0 * root / (kPi * duration);
}

Spectrogram diff_map(const Spectrogram& a, const Spectrogram& b) {
    a.validate();
    b.validate();
    if (a.row_axis != b.row_axis || a.col_axis != b.col_axis || a.col_kind != b.col_kind)
        throw ConfigError("diff_map: axes differ");
    Spectrogram out = a;
    out.values = a.values - b.values;
    out.quantity = "difference(" + a.quantity + ")";
    out.metadata = {{"minuend", a.metadata}, {"subtrahend", b.metadata}};
    return out;
}

Series mean_driven_response(const Spectrogram& map) {
    map.validate();
    if (!map.pulse_off_index) throw ConfigError("mean_driven_response requires a pulse-off index");
    const std::size_t stop = *map.pulse_off_index;
    if (stop == 0) throw ConfigError("mean_driven_response: no in-pulse columns");
    Series out;
    out.axis = map.row_axis;
    out.name = "mean_driven(" + map.quantity + ")";
    out.values.resize(map.rows());
    for (std::size_t r = 0; r < map.rows(); ++r) {
        out.values[r] = map.values.row(static_cast<Eigen::Index>(r)).head(static_cast<Eigen::Index>(stop)).mean();
    }
    out.metadata = map.metadata;
    out.metadata["mean_driven"] = {{"source_quantity", map.quantity}, {"in_pulse_columns", stop}};
    return out;
}

std::optional<std::size_t> peak_in_range(const std::vector<double>& axis, const std::vector<double>& values,
                                         double lo, double hi) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < axis.size() && i < values.size(); ++i) {
        if (axis[i] < lo || axis[i] > hi) continue;
        if (!best || values[i] > values[*best]) best = i;
    }
    return best;
}

std::optional<double> full_width_half_max(const std::vector<double>& axis, const std::vector<double>& values,
                                          std::size_t peak) {
    if (peak >= values.size() || axis.size() != values.size()) return std::nullopt;
    const double half = 0.5 * values[peak];
    std::size_t l = peak;
    while (l > 0 && values[l - 1] > half) --l;
    if (l == 0) return std::nullopt;
    std::size_t r = peak;
    while (r + 1 < values.size() && values[r + 1] > half) ++r;
    if (r + 1 == values.size()) return std::nullopt;
    auto cross = [&](std::size_t inside, std::size_t outside) {
        const double a = values[inside];
        const double b = values[outside];
        return axis[inside] + (axis[outside] - axis[inside]) * (a - half) / (a - b);
    };
    return cross(r, r + 1) - cross(l, l - 1);
}

std::vector<double> row_values(const Spectrogram& map, std::size_t row) {
    const auto r = map.values.row(static_cast<Eigen::Index>(row));
    return {r.data(), r.data() + r.size()};
}

std::vector<double> column_values(const Spectrogram& map, std::size_t col) {
    std::vector<double> out(map.rows());
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = map.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col));
    return out;
}

TimeTrace row_trace(const Spectrogram& map, std::size_t row, TraceKind kind) {
    if (map.col_kind != ColumnAxis::time) throw ConfigError("row_trace expects a time-domain map");
    if (kind == TraceKind::iq) throw ConfigError("row_trace produces real traces only");
    TimeTrace t;
    t.t0 = map.col_axis.empty() ? 0.0 : map.col_axis.front();
    t.dt = uniform_step(map.col_axis, "row_trace");
    t.kind = kind;
    t.values = row_values(map, row);
    return t;
}

}  // namespace tlsspec
