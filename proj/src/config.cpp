#include "tlsspec/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace tlsspec {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    require_object(j, where);
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed) known = known || item.key() == k;
        if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

double number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

std::optional<double> optional_number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return number(j, key, where);
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
    return optional_number(j, key, where).value_or(fallback);
}

std::uint64_t unsigned_or(const json& j, const char* key, std::uint64_t fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
        throw ConfigError(where + "." + key + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
}

bool bool_or(const json& j, const char* key, bool fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
    return j.at(key).get<bool>();
}

std::vector<double> number_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(where + ": expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

std::array<double, 2> range(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    const auto v = number_list(j.at(key), where + "." + key);
    if (v.size() != 2 || v[0] > v[1]) throw ConfigError(where + "." + key + ": expected [low, high]");
    return {v[0], v[1]};
}

}  // namespace

json to_json(const GainTable& gain) { return {{"freq_hz", gain.freq}, {"scale", gain.scale}}; }

GainTable gain_from_json(const json& j) {
    const std::string where = "gain_table";
    check_keys(j, {"freq_hz", "scale"}, where);
    GainTable g;
    if (!j.contains("freq_hz") || !j.contains("scale")) throw ConfigError(where + ": needs freq_hz and scale");
    g.freq = number_list(j.at("freq_hz"), where + ".freq_hz");
    g.scale = number_list(j.at("scale"), where + ".scale");
    g.validate();
    return g;
}

json to_json(const EnsembleSpec& spec) {
    json defects = json::array();
    for (const auto& d : spec.defects)
        defects.push_back({{"epsilon_hz", d.epsilon}, {"delta_hz", d.delta}, {"dipole", d.dipole}});
    json couplings = json::array();
    for (Eigen::Index i = 0; i < spec.couplings.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < spec.couplings.cols(); ++k) row.push_back(spec.couplings(i, k));
        couplings.push_back(row);
    }
    json out = {{"defects", defects}, {"couplings_hz", couplings}, {"gamma_hz", spec.gamma},
                {"max_defects", spec.max_defects}};
    if (spec.disorder) {
        out["disorder"] = {{"splitting_range_hz", spec.disorder->epsilon_range},
                           {"coupling_range_hz", spec.disorder->j_range},
                           {"seed", spec.disorder->seed}};
    }
    return out;
}

EnsembleSpec ensemble_from_json(const json& j) {
    const std::string where = "ensemble";
    check_keys(j, {"defects", "couplings_hz", "coupling_hz", "gamma_hz", "disorder", "max_defects"}, where);
    EnsembleSpec spec;
    if (!j.contains("defects") || !j.at("defects").is_array())
        throw ConfigError(where + ": 'defects' must be an array");
    for (std::size_t i = 0; i < j.at("defects").size(); ++i) {
        const json& d = j.at("defects").at(i);
        const std::string w = where + ".defects[" + std::to_string(i) + "]";
        check_keys(d, {"epsilon_hz", "delta_hz", "dipole"}, w);
        spec.defects.push_back({number_or(d, "epsilon_hz", 0.0, w), number_or(d, "delta_hz", 0.0, w),
                                number_or(d, "dipole", 1.0, w)});
    }
    const auto n = static_cast<Eigen::Index>(spec.defects.size());
    if (j.contains("couplings_hz") && j.contains("coupling_hz"))
        throw ConfigError(where + ": give either couplings_hz or coupling_hz, not both");
    if (j.contains("couplings_hz")) {
        const json& c = j.at("couplings_hz");
        if (!c.is_array()) throw ConfigError(where + ".couplings_hz: expected a matrix");
        if (!c.empty()) {
            if (static_cast<Eigen::Index>(c.size()) != n) throw ConfigError(where + ".couplings_hz: must be N x N");
            spec.couplings = RMatrix::Zero(n, n);
            for (Eigen::Index r = 0; r < n; ++r) {
                const auto row = number_list(c.at(static_cast<std::size_t>(r)), where + ".couplings_hz");
                if (static_cast<Eigen::Index>(row.size()) != n) throw ConfigError(where + ".couplings_hz: must be N x N");
                for (Eigen::Index k = 0; k < n; ++k) spec.couplings(r, k) = row[static_cast<std::size_t>(k)];
            }
        }
    } else if (j.contains("coupling_hz")) {
        // uniform all-to-all coupling
        const double jj = number(j, "coupling_hz", where);
        spec.couplings = RMatrix::Constant(n, n, jj);
        spec.couplings.diagonal().setZero();
    }
    spec.gamma = number_or(j, "gamma_hz", 0.0, where);
    spec.max_defects = unsigned_or(j, "max_defects", spec.max_defects, where);
    if (j.contains("disorder")) {
        const json& d = j.at("disorder");
        const std::string w = where + ".disorder";
        check_keys(d, {"splitting_range_hz", "coupling_range_hz", "seed"}, w);
        DisorderSpec dis;
        dis.epsilon_range = range(d, "splitting_range_hz", w);
        dis.j_range = d.contains("coupling_range_hz") ? range(d, "coupling_range_hz", w) : std::array<double, 2>{0.0, 0.0};
        dis.seed = unsigned_or(d, "seed", 0, w);
        spec.disorder = dis;
    }
    spec.validate();
    return spec;
}

json to_json(const DrivePulse& pulse) {
    json out = {{"carrier_hz", pulse.carrier},
                {"amplitude_hz", pulse.amplitude},
                {"duration_s", pulse.duration},
                {"envelope", pulse.envelope == Envelope::square ? "square" : "square_cosine"}};
    if (pulse.gain_table) out["gain_table"] = to_json(*pulse.gain_table);
    return out;
}

DrivePulse pulse_from_json(const json& j) {
    const std::string where = "pulse";
    check_keys(j, {"carrier_hz", "amplitude_hz", "duration_s", "envelope", "gain_table"}, where);
    DrivePulse p;
    p.carrier = number_or(j, "carrier_hz", 0.0, where);
    p.amplitude = number(j, "amplitude_hz", where);
    p.duration = number_or(j, "duration_s", 0.0, where);
    if (j.contains("envelope")) {
        const json& e = j.at("envelope");
        if (e == "square") p.envelope = Envelope::square;
        else if (e == "square_cosine") p.envelope = Envelope::square_cosine;
        else throw ConfigError(where + ".envelope: expected 'square' or 'square_cosine'");
    }
    if (j.contains("gain_table")) p.gain_table = gain_from_json(j.at("gain_table"));
    return p;
}

namespace {

json sweep_section(const SweepPlan& plan) {
    return {{"freq_start_hz", plan.freq_axis.start},
            {"freq_stop_hz", plan.freq_axis.stop},
            {"freq_count", plan.freq_axis.count},
            {"durations_s", plan.durations},
            {"t_end_s", plan.t_end ? json(*plan.t_end) : json(nullptr)},
            {"realizations", plan.realizations.count},
            {"base_seed", plan.realizations.base_seed},
            {"max_dt_s", plan.max_dt ? json(*plan.max_dt) : json(nullptr)},
            {"record_interval_s", plan.record_interval ? json(*plan.record_interval) : json(nullptr)}};
}

}  // namespace

json to_json(const SweepPlan& plan) {
    json out = sweep_section(plan);
    out["ensemble"] = to_json(plan.spec);
    out["pulse"] = to_json(plan.pulse_template);
    out["ringdown_s"] = kDefaultRingdown;
    return out;
}

SweepPlan sweep_plan_from_json(const json& ensemble, const json& pulse, const json& sweep) {
    const std::string where = "sweep";
    check_keys(sweep, {"freq_start_hz", "freq_stop_hz", "freq_count", "durations_s", "t_end_s", "realizations",
                       "base_seed", "max_dt_s", "record_interval_s"},
               where);
    SweepPlan plan;
    plan.spec = ensemble_from_json(ensemble);
    plan.pulse_template = pulse_from_json(pulse);
    plan.freq_axis.start = number(sweep, "freq_start_hz", where);
    plan.freq_axis.stop = number(sweep, "freq_stop_hz", where);
    plan.freq_axis.count = unsigned_or(sweep, "freq_count", 81, where);
    if (sweep.contains("durations_s")) {
        plan.durations = number_list(sweep.at("durations_s"), where + ".durations_s");
    } else if (plan.pulse_template.duration > 0.0) {
        plan.durations = {plan.pulse_template.duration};
    }
    plan.t_end = optional_number(sweep, "t_end_s", where);
    plan.realizations.count = unsigned_or(sweep, "realizations", 1, where);
    plan.realizations.base_seed =
        unsigned_or(sweep, "base_seed", plan.spec.disorder ? plan.spec.disorder->seed : 0, where);
    plan.max_dt = optional_number(sweep, "max_dt_s", where);
    plan.record_interval = optional_number(sweep, "record_interval_s", where);
    if (plan.pulse_template.carrier == 0.0) plan.pulse_template.carrier = plan.freq_axis.start;
    if (plan.pulse_template.duration == 0.0 && !plan.durations.empty())
        plan.pulse_template.duration = plan.durations.front();
    plan.validate();
    return plan;
}

json to_json(const FloquetOptions& o) {
    return {{"m_max", o.m_max}, {"tolerance_hz", o.tolerance}, {"max_doublings", o.max_doublings}};
}

FloquetOptions floquet_options_from_json(const json& j) {
    const std::string where = "floquet";
    check_keys(j, {"m_max", "tolerance_hz", "max_doublings"}, where);
    FloquetOptions o;
    o.m_max = static_cast<int>(unsigned_or(j, "m_max", static_cast<std::uint64_t>(o.m_max), where));
    o.tolerance = number_or(j, "tolerance_hz", o.tolerance, where);
    o.max_doublings = static_cast<int>(unsigned_or(j, "max_doublings", static_cast<std::uint64_t>(o.max_doublings), where));
    if (o.m_max < 2) throw ConfigError("floquet.m_max must be >= 2");
    if (!(o.tolerance > 0.0)) throw ConfigError("floquet.tolerance_hz must be > 0");
    return o;
}

json to_json(const AnalysisConfig& a) {
    return {{"fft_window", a.fft_window == FftWindow::full ? "full" : "post_pulse"},
            {"fft_log_input", a.fft_log_input},
            {"fft_hann", a.fft.hann},
            {"fft_subtract_mean", a.fft.subtract_mean},
            {"fft_pad_factor", a.fft.pad_factor},
            {"g2_max_lag_s", a.g2_max_lag},
            {"chi_mode", a.chi.mode == ChiMode::one_sided ? "one_sided" : "two_sided_even"},
            {"chi_pad_factor", a.chi.pad_factor}};
}

AnalysisConfig analysis_from_json(const json& j) {
    const std::string where = "analysis";
    check_keys(j, {"fft_window", "fft_log_input", "fft_hann", "fft_subtract_mean", "fft_pad_factor", "g2_max_lag_s",
                   "chi_mode", "chi_pad_factor"},
               where);
    AnalysisConfig a;
    if (j.contains("fft_window")) {
        const json& w = j.at("fft_window");
        if (w == "full") a.fft_window = FftWindow::full;
        else if (w == "post_pulse") a.fft_window = FftWindow::post_pulse;
        else throw ConfigError(where + ".fft_window: expected 'full' or 'post_pulse'");
    }
    a.fft_log_input = bool_or(j, "fft_log_input", a.fft_log_input, where);
    a.fft.hann = bool_or(j, "fft_hann", a.fft.hann, where);
    a.fft.subtract_mean = bool_or(j, "fft_subtract_mean", a.fft.subtract_mean, where);
    a.fft.pad_factor = unsigned_or(j, "fft_pad_factor", a.fft.pad_factor, where);
    a.g2_max_lag = number_or(j, "g2_max_lag_s", a.g2_max_lag, where);
    if (j.contains("chi_mode")) {
        const json& m = j.at("chi_mode");
        if (m == "one_sided") a.chi.mode = ChiMode::one_sided;
        else if (m == "two_sided_even") a.chi.mode = ChiMode::two_sided_even;
        else throw ConfigError(where + ".chi_mode: expected 'one_sided' or 'two_sided_even'");
    }
    a.chi.pad_factor = unsigned_or(j, "chi_pad_factor", a.chi.pad_factor, where);
    if (a.fft.pad_factor < 1 || a.chi.pad_factor < 1) throw ConfigError(where + ": pad factors must be >= 1");
    if (!(a.g2_max_lag >= 0.0)) throw ConfigError(where + ".g2_max_lag_s must be >= 0");
    return a;
}

json RunConfig::to_json() const {
    return {{"version", kConfigVersion},
            {"name", name},
            {"ensemble", tlsspec::to_json(plan.spec)},
            {"pulse", tlsspec::to_json(plan.pulse_template)},
            {"sweep", sweep_section(plan)},
            {"floquet", tlsspec::to_json(floquet)},
            {"analysis", tlsspec::to_json(analysis)},
            {"output", output.string()}};
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
    check_keys(j, {"version", "name", "description", "ensemble", "pulse", "sweep", "floquet", "analysis", "output"},
               "config");
    if (!j.contains("version") || !j.at("version").is_number_integer() || j.at("version").get<int>() != kConfigVersion)
        throw ConfigError("config: 'version' must be " + std::to_string(kConfigVersion));
    for (const char* key : {"ensemble", "pulse", "sweep"}) {
        if (!j.contains(key)) throw ConfigError(std::string("config: missing '") + key + "'");
    }
    RunConfig cfg;
    if (j.contains("name")) {
        if (!j.at("name").is_string()) throw ConfigError("config.name: expected a string");
        cfg.name = j.at("name").get<std::string>();
    }
    cfg.plan = sweep_plan_from_json(j.at("ensemble"), j.at("pulse"), j.at("sweep"));
    if (j.contains("floquet")) cfg.floquet = floquet_options_from_json(j.at("floquet"));
    if (j.contains("analysis")) cfg.analysis = analysis_from_json(j.at("analysis"));
    if (j.contains("output")) {
        if (!j.at("output").is_string()) throw ConfigError("config.output: expected a path string");
        std::filesystem::path out = j.at("output").get<std::string>();
        cfg.output = out.is_relative() && !base_dir.empty() ? base_dir / out : out;
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(IoError::Kind::not_found, "cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j, {});
}

}  // namespace tlsspec
