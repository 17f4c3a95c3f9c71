#include "tlsspec/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>

#include "tlsspec/config.hpp"
#include "tlsspec/csv.hpp"
#include "tlsspec/dataset.hpp"
#include "tlsspec/render.hpp"
#include "tlsspec/waveguide.hpp"

namespace tlsspec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string duration_label(double tau) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "tau_%gns", tau * 1e9);
    return buf;
}

FftWindow parse_window(const std::string& s) {
    if (s == "post-pulse" || s == "post_pulse") return FftWindow::post_pulse;
    if (s == "full") return FftWindow::full;
    throw ConfigError("window must be 'post-pulse' or 'full'");
}

void refuse_existing(const fs::path& p, bool force) {
    if (!force && fs::exists(p)) throw IoError(IoError::Kind::exists, p.string() + " already exists (use --force)");
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
    std::string config;
    std::string output;
    std::size_t workers{0};
    bool force{false};
    bool dry_run{false};
};

json execution_plan(const RunConfig& cfg, const fs::path& out, std::size_t workers) {
    json runs = json::array();
    std::size_t total_steps = 0;
    for (double tau : cfg.plan.durations) {
        const TimeGrid g = make_time_grid(cfg.plan, tau);
        const auto steps = static_cast<std::size_t>(std::ceil(g.t_end / g.dt - 1e-9));
        total_steps += steps * cfg.plan.freq_axis.count * cfg.plan.realizations.count;
        runs.push_back({{"duration_s", tau},
                        {"dt_s", g.dt},
                        {"steps_per_point", steps},
                        {"record_stride", g.stride},
                        {"record_dt_s", g.record_dt},
                        {"samples", g.samples},
                        {"pulse_off_index", g.pulse_off_index},
                        {"t_end_s", g.t_end},
                        {"output", (out / duration_label(tau)).string()}});
    }
    return {{"config", cfg.to_json()},
            {"hilbert_dim", cfg.plan.spec.dim()},
            {"frequency_points", cfg.plan.freq_axis.count},
            {"realizations", cfg.plan.realizations.count},
            {"workers", workers},
            {"total_rk4_steps", total_steps},
            {"runs", runs}};
}

int run_simulate(const SimulateArgs& a, std::ostream& out) {
    RunConfig cfg = load_run_config(a.config);
    const fs::path dir = !a.output.empty() ? fs::path(a.output) : cfg.output;
    if (dir.empty()) throw ConfigError("no output directory (set 'output' in the config or pass --output)");
    const std::size_t workers = a.workers != 0 ? a.workers : default_workers();
    const json plan = execution_plan(cfg, dir, workers);
    if (a.dry_run) {
        out << plan.dump(2) << '\n';
        return 0;
    }
    for (double tau : cfg.plan.durations) {
        refuse_existing(dir / duration_label(tau) / "population", a.force);
        refuse_existing(dir / duration_label(tau) / "dipole", a.force);
    }
    const auto start = std::chrono::steady_clock::now();
    const std::vector<SweepResult> results = run_plan(cfg.plan, {workers});
    json timing = json::array();
    for (std::size_t d = 0; d < results.size(); ++d) {
        SweepResult r = results[d];
        const fs::path sub = dir / duration_label(r.duration);
        for (Spectrogram* map : {&r.population, &r.dipole}) {
            map->metadata["run"] = {{"name", cfg.name}, {"analysis", to_json(cfg.analysis)}};
            write_dataset(*map, sub / map->quantity, {a.force});
        }
        timing.push_back({{"duration_s", r.duration}, {"wall_time_s", r.wall_time}});
        out << "wrote " << (sub / "population").string() << " and " << (sub / "dipole").string() << '\n';
    }
    // Wall times vary run to run, so they live beside the datasets, not in them.
    std::ofstream t(dir / "timing.json", std::ios::trunc);
    t << json({{"workers", workers},
               {"total_wall_time_s",
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
               {"per_point", timing}})
             .dump(2)
      << '\n';
    return 0;
}

// ---- floquet ----------------------------------------------------------------

int run_floquet(const SimulateArgs& a, std::ostream& out) {
    RunConfig cfg = load_run_config(a.config);
    const fs::path dir = !a.output.empty() ? fs::path(a.output) : cfg.output / "floquet";
    const std::size_t workers = a.workers != 0 ? a.workers : default_workers();
    const EnsembleSpec spec = realize(cfg.plan, 0);
    if (a.dry_run) {
        out << json({{"ensemble", to_json(spec)},
                     {"pulse", to_json(cfg.plan.pulse_template)},
                     {"frequency_points", cfg.plan.freq_axis.count},
                     {"floquet", to_json(cfg.floquet)},
                     {"workers", workers},
                     {"output", dir.string()}})
                   .dump(2)
            << '\n';
        return 0;
    }
    refuse_existing(dir, a.force);
    FloquetSweep sweep = floquet_sweep(spec, cfg.plan.pulse_template, cfg.plan.freq_axis.points(), cfg.floquet, workers);
    sweep.metadata["ensemble"] = to_json(spec);
    sweep.metadata["bare_frequencies_hz"] = bare_transition_frequencies(spec);
    write_dataset(sweep, dir, {a.force});
    out << "wrote " << dir.string() << '\n';
    return 0;
}

// ---- render -----------------------------------------------------------------

DrivePulse pulse(double carrier, double amplitude, double duration) {
    DrivePulse p;
    p.carrier = carrier;
    p.amplitude = amplitude;
    p.duration = duration;
    return p;
}

std::vector<double> bare_markers(const json& meta) {
    std::set<double> unique;
    if (meta.contains("realizations") && meta.at("realizations").is_array()) {
        for (const auto& r : meta.at("realizations")) {
            if (r.contains("bare_frequencies_hz"))
                for (const auto& f : r.at("bare_frequencies_hz")) unique.insert(f.get<double>());
        }
    }
    if (meta.contains("bare_frequencies_hz"))
        for (const auto& f : meta.at("bare_frequencies_hz")) unique.insert(f.get<double>());
    return {unique.begin(), unique.end()};
}

}  // namespace

int run_selftest(std::ostream& out) {
    int failures = 0;
    auto check = [&](const std::string& name, const std::function<bool()>& body) {
        bool ok = false;
        std::string detail;
        try {
            ok = body();
        } catch (const std::exception& e) {
            detail = std::string(" (") + e.what() + ")";
        }
        out << (ok ? "PASS " : "FAIL ") << name << detail << '\n';
        if (!ok) ++failures;
    };

    EnsembleSpec pair;
    pair.defects = {{0.0, 4.0e9, 1.0}, {0.0, 4.3e9, 0.8}};
    pair.couplings = RMatrix::Zero(2, 2);
    pair.couplings(0, 1) = pair.couplings(1, 0) = 30e6;
    pair.gamma = 2e6;

    check("static Hamiltonian and polarization are Hermitian", [&] {
        return hermiticity_error(build_static_hamiltonian(pair).entries) < 1e-12 &&
               hermiticity_error(build_polarization_operator(pair).entries) < 1e-12;
    });
    check("driven evolution stays a physical state", [&] {
        const EvolutionResult r = evolve(pair, pulse(4.1e9, 50e6, 10e-9), 10e-9, 0.25 * default_time_step(4.1e9));
        const StateReport rep = validate_state(r.final_state);
        return rep.trace_error < 1e-10 && rep.hermiticity_error < 1e-10 && rep.min_eigenvalue > -1e-8;
    });
    check("uncoupled ground state is stationary without drive", [&] {
        EnsembleSpec free = pair;
        free.couplings.setZero();
        const EvolutionResult r = evolve(free, pulse(4.0e9, 0.0, 1e-9), 20e-9, default_time_step(4.0e9));
        return *std::max_element(r.population.begin(), r.population.end()) < 1e-10;
    });
    check("Bessel sum rule J0 + 2 sum J2k = 1", [] {
        for (double x : {0.3, 2.0, 17.5}) {
            double s = bessel_j(0, x);
            for (int k = 1; k < 60; ++k) s += 2.0 * bessel_j(2 * k, x);
            if (std::abs(s - 1.0) > 1e-12) return false;
        }
        return true;
    });
    check("undriven quasi-energies equal folded bare levels", [&] {
        const FloquetSpectrum s = quasi_energies(pair, pulse(1.3e9, 0.0, 1e-9), {4, 0.1e6, 0});
        Eigen::SelfAdjointEigenSolver<CMatrix> es(build_static_hamiltonian(pair).entries / kTwoPi);
        std::vector<double> want;
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) want.push_back(fold_quasi_energy(es.eigenvalues()(k), 1.3e9));
        std::sort(want.begin(), want.end());
        for (std::size_t k = 0; k < want.size(); ++k)
            if (std::abs(want[k] - s.quasi_energies[k]) > 1e-9 * 1.3e9) return false;
        return true;
    });
    check("g2 is invariant under intensity scaling", [] {
        Spectrogram m;
        m.row_axis = {1.0};
        for (int k = 0; k < 64; ++k) m.col_axis.push_back(k * 1e-9);
        m.values = RMatrix(1, 64);
        for (int k = 0; k < 64; ++k) m.values(0, k) = 1.5 + std::sin(0.4 * k);
        m.pulse_off_index = 0;
        Spectrogram scaled = m;
        scaled.values *= 7.25;
        const auto a = g2_map(m, 20e-9), b = g2_map(scaled, 20e-9);
        return ((a.g2 - b.g2).cwiseAbs().maxCoeff() / a.g2.cwiseAbs().maxCoeff()) < 1e-12;
    });
    check("diff_map is antisymmetric", [] {
        Spectrogram a;
        a.row_axis = {1.0, 2.0};
        a.col_axis = {0.0, 1.0, 2.0};
        a.values = RMatrix::Random(2, 3);
        Spectrogram b = a;
        b.values = RMatrix::Random(2, 3);
        return (diff_map(a, b).values + diff_map(b, a).values).cwiseAbs().maxCoeff() == 0.0;
    });
    check("waveguide propagation constant vanishes at cutoff", [] {
        const WaveguideGeometry g{58.17e-3, 29.08e-3};
        const double fc = mode_cutoffs(g, 1, 1).front().cutoff;
        return propagation_constant(g, fc, 1, 0).beta == 0.0;
    });
    check("dataset round trip is bit-exact", [] {
        Spectrogram m;
        m.row_axis = {3e9, 3.5e9};
        m.col_axis = {0.0, 1e-10, 2e-10};
        m.values = RMatrix::Random(2, 3);
        m.pulse_off_index = 1;
        const fs::path dir = fs::temp_directory_path() / ("tlsspec-selftest-" + std::to_string(::getpid()));
        write_dataset(m, dir, {true});
        const Spectrogram r = read_spectrogram(dir);
        fs::remove_all(dir);
        return r.values == m.values && r.row_axis == m.row_axis && r.col_axis == m.col_axis &&
               r.pulse_off_index == m.pulse_off_index;
    });
    out << (failures == 0 ? "selftest passed" : "selftest FAILED") << '\n';
    return failures;
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Transient spectroscopy of driven, interacting two-level-system ensembles", "tlsspec"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run the drive-frequency sweeps of a config into spectrogram datasets");
    simulate->add_option("--config", sim.config, "Run configuration (JSON)")->required();
    simulate->add_option("--output", sim.output, "Output directory (overrides the config)");
    simulate->add_option("--workers", sim.workers, "Parallel sweep workers (default $TLSSPEC_WORKERS or 1)");
    simulate->add_flag("--force", sim.force, "Replace existing datasets");
    simulate->add_flag("--dry-run", sim.dry_run, "Validate and print the execution plan only");

    SimulateArgs flq;
    auto* floquet = app.add_subcommand("floquet", "Quasi-energies over the config's drive-frequency axis");
    floquet->add_option("--config", flq.config, "Run configuration (JSON)")->required();
    floquet->add_option("--output", flq.output, "Output dataset directory");
    floquet->add_option("--workers", flq.workers, "Parallel workers");
    floquet->add_flag("--force", flq.force, "Replace an existing dataset");
    floquet->add_flag("--dry-run", flq.dry_run, "Validate and print the plan only");

    auto* analyze = app.add_subcommand("analyze", "Signal processing on datasets");
    analyze->require_subcommand(1);
    bool force = false;
    std::string in, in2, dest, window = "post-pulse";

    auto* fft = analyze->add_subcommand("fft", "Ring-down FFT of a time-domain spectrogram");
    bool fft_log = false, fft_no_hann = false, fft_keep_mean = false;
    std::size_t pad = 4;
    fft->add_option("input", in, "Input spectrogram dataset")->required();
    fft->add_option("output", dest, "Output dataset")->required();
    fft->add_option("--window", window, "post-pulse | full")->capture_default_str();
    fft->add_flag("--log", fft_log, "Transform log10 of the magnitude");
    fft->add_flag("--no-hann", fft_no_hann, "Disable the Hann window");
    fft->add_flag("--keep-mean", fft_keep_mean, "Skip mean subtraction");
    fft->add_option("--pad", pad, "Zero-padding factor")->capture_default_str();
    fft->add_flag("--force", force, "Replace an existing dataset");

    auto* g2 = analyze->add_subcommand("g2", "Intensity correlation g2 per drive frequency");
    double max_lag_ns = 100.0;
    bool square = false;
    g2->add_option("input", in, "Input time-domain spectrogram (intensity)")->required();
    g2->add_option("output", dest, "Output dataset")->required();
    g2->add_option("--max-lag-ns", max_lag_ns, "Largest lag, ns")->capture_default_str();
    g2->add_option("--window", window, "post-pulse | full")->capture_default_str();
    g2->add_flag("--square", square, "Square the input first (amplitude or dipole maps)");
    g2->add_flag("--force", force, "Replace an existing dataset");

    auto* chi = analyze->add_subcommand("chi", "chi'' from the unnormalized intensity correlation");
    std::string chi_mode = "one-sided";
    std::string crossings;
    chi->add_option("input", in, "Input g2_map dataset")->required();
    chi->add_option("output", dest, "Output chi_map dataset")->required();
    chi->add_option("--mode", chi_mode, "one-sided | two-sided")->capture_default_str();
    chi->add_option("--pad", pad, "Zero-padding factor")->capture_default_str();
    chi->add_option("--crossings", crossings, "Write zero crossings (drive Hz, omega Hz) to this CSV");
    chi->add_flag("--force", force, "Replace an existing dataset");

    auto* lifetime = analyze->add_subcommand("lifetime", "Exponential envelope fit");
    double start_ns = 0.0, stop_ns = 0.0, envelope_ns = 0.0, floor = 0.0;
    std::optional<std::size_t> row;
    lifetime->add_option("input", in, "time_trace or spectrogram dataset")->required();
    lifetime->add_option("--start-ns", start_ns, "Window start, ns")->required();
    lifetime->add_option("--stop-ns", stop_ns, "Window stop, ns")->required();
    lifetime->add_option("--envelope-ns", envelope_ns, "Moving-maximum width, ns")->capture_default_str();
    lifetime->add_option("--floor", floor, "Subtracted before the log")->capture_default_str();
    lifetime->add_option("--row", row, "Spectrogram row to fit");

    auto* diff = analyze->add_subcommand("diff", "Difference a - b of two spectrograms");
    diff->add_option("a", in, "Minuend dataset")->required();
    diff->add_option("b", in2, "Subtrahend dataset")->required();
    diff->add_option("output", dest, "Output dataset")->required();
    diff->add_flag("--force", force, "Replace an existing dataset");

    auto* mean = analyze->add_subcommand("mean-driven", "Per-frequency mean over the in-pulse columns");
    mean->add_option("input", in, "Input spectrogram")->required();
    mean->add_option("output", dest, "Output series dataset")->required();
    mean->add_flag("--force", force, "Replace an existing dataset");

    auto* homodyne = analyze->add_subcommand("homodyne", "Amplitude sqrt(I^2 + Q^2) of an IQ trace");
    bool to_intensity = false;
    homodyne->add_option("input", in, "IQ time_trace dataset")->required();
    homodyne->add_option("output", dest, "Output amplitude trace")->required();
    homodyne->add_flag("--intensity", to_intensity, "Square the amplitude");
    homodyne->add_flag("--force", force, "Replace an existing dataset");

    auto* import = analyze->add_subcommand("import-iq", "Import an IQ CSV (t,i,q or i,q) as a time_trace");
    std::optional<double> dt_ns;
    double t0_ns = 0.0;
    import->add_option("csv", in, "CSV file")->required();
    import->add_option("output", dest, "Output dataset")->required();
    import->add_option("--dt-ns", dt_ns, "Sample spacing when the CSV has no t column, ns");
    import->add_option("--t0-ns", t0_ns, "Start time when the CSV has no t column, ns")->capture_default_str();
    import->add_flag("--force", force, "Replace an existing dataset");

    auto* waveguide = app.add_subcommand("waveguide", "Rectangular waveguide modes and drive flattening");
    waveguide->require_subcommand(1);
    double a_mm = 58.17, b_mm = 29.08, freq_ghz = 0.0, target = 0.0;
    int m_idx = 1, n_idx = 0, count = 6;
    auto* modes = waveguide->add_subcommand("modes", "Lowest mode cutoff frequencies");
    modes->add_option("--a-mm", a_mm, "Broad wall, mm")->capture_default_str();
    modes->add_option("--b-mm", b_mm, "Narrow wall, mm")->capture_default_str();
    modes->add_option("--count", count, "Modes to list")->capture_default_str();
    auto* beta = waveguide->add_subcommand("beta", "Propagation constant of one mode");
    beta->add_option("--a-mm", a_mm, "Broad wall, mm")->capture_default_str();
    beta->add_option("--b-mm", b_mm, "Narrow wall, mm")->capture_default_str();
    beta->add_option("--freq-ghz", freq_ghz, "Frequency, GHz")->required();
    beta->add_option("--m", m_idx, "Mode index m")->capture_default_str();
    beta->add_option("--n", n_idx, "Mode index n")->capture_default_str();
    auto* flatten = waveguide->add_subcommand("flatten", "Gain table that flattens a measured field profile");
    flatten->add_option("--profile", in, "CSV with freq_hz, mean_field")->required();
    flatten->add_option("--target", target, "Target field value")->required();
    flatten->add_option("--output", dest, "Gain table CSV (freq_hz, scale)")->required();

    auto* render = app.add_subcommand("render", "Heatmap or line cut of a dataset (.png or .svg)");
    std::string colormap = "viridis", panel = "g2";
    std::optional<double> clip;
    bool log = false, no_markers = false, bandwidth = false;
    render->add_option("input", in, "Dataset")->required();
    render->add_option("output", dest, "Image path")->required();
    render->add_option("--colormap", colormap, "viridis | magma | gray")->capture_default_str();
    render->add_option("--clip", clip, "Clip the colour scale to [100-p, p] percentiles");
    render->add_flag("--log", log, "Colour by log10 magnitude");
    render->add_option("--panel", panel, "g2 | chi (correlation datasets)")->capture_default_str();
    render->add_flag("--no-markers", no_markers, "Omit bare-frequency markers");
    render->add_flag("--bandwidth", bandwidth, "Draw the pulse bandwidth bar");

    app.add_subcommand("selftest", "Run the quick invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return kExitUsage;
    }

    try {
        if (simulate->parsed()) return run_simulate(sim, out);
        if (floquet->parsed()) return run_floquet(flq, out);
        if (app.got_subcommand("selftest")) return run_selftest(out) == 0 ? 0 : static_cast<int>(ErrorCategory::numeric);

        if (analyze->parsed()) {
            const WriteOptions wo{force};
            if (fft->parsed()) {
                FftOptions o;
                o.hann = !fft_no_hann;
                o.subtract_mean = !fft_keep_mean;
                o.pad_factor = pad;
                write_dataset(ringdown_fft(read_spectrogram(in), parse_window(window), fft_log, o), dest, wo);
            } else if (g2->parsed()) {
                Spectrogram m = read_spectrogram(in);
                if (square) {
                    m.values = m.values.cwiseAbs2();
                    m.quantity = "square(" + m.quantity + ")";
                }
                write_dataset(g2_map(m, max_lag_ns * 1e-9, parse_window(window)), dest, wo);
            } else if (chi->parsed()) {
                ChiOptions o;
                if (chi_mode == "one-sided") o.mode = ChiMode::one_sided;
                else if (chi_mode == "two-sided") o.mode = ChiMode::two_sided_even;
                else throw ConfigError("--mode must be 'one-sided' or 'two-sided'");
                o.pad_factor = pad;
                const CorrelationMap c = chi_imag(read_correlation_map(in), o);
                if (!crossings.empty()) {
                    refuse_existing(crossings, force);
                    std::ofstream csv(crossings, std::ios::trunc);
                    if (!csv) throw IoError(IoError::Kind::unwritable, "cannot write " + crossings);
                    csv << "drive_freq_hz,omega_hz\n" << std::setprecision(17);
                    for (const auto& z : chi_zero_crossings(c)) csv << z.drive_freq << ',' << z.omega << '\n';
                }
                write_dataset(c, dest, wo);
            } else if (lifetime->parsed()) {
                const DatasetObject obj = read_dataset(in);
                TimeTrace trace;
                if (const auto* t = std::get_if<TimeTrace>(&obj)) {
                    trace = t->kind == TraceKind::iq ? homodyne_amplitude(*t) : *t;
                } else if (const auto* s = std::get_if<Spectrogram>(&obj)) {
                    if (!row) throw ConfigError("--row is required for spectrogram input");
                    if (*row >= s->rows()) throw ConfigError("--row out of range");
                    trace = row_trace(*s, *row);
                } else {
                    throw ConfigError("lifetime needs a time_trace or spectrogram dataset");
                }
                const LifetimeFit fit = fit_lifetime(trace, start_ns * 1e-9, stop_ns * 1e-9, {envelope_ns * 1e-9, floor});
                out << json({{"tau_s", fit.tau}, {"amplitude", fit.amplitude}, {"log_residual_rms", fit.residual},
                             {"samples", fit.samples}})
                           .dump(2)
                    << '\n';
                return 0;
            } else if (diff->parsed()) {
                write_dataset(diff_map(read_spectrogram(in), read_spectrogram(in2)), dest, wo);
            } else if (mean->parsed()) {
                write_dataset(mean_driven_response(read_spectrogram(in)), dest, wo);
            } else if (homodyne->parsed()) {
                TimeTrace t = homodyne_amplitude(read_time_trace(in));
                if (to_intensity) t = intensity(t);
                write_dataset(t, dest, wo);
            } else if (import->parsed()) {
                std::optional<double> dt;
                if (dt_ns) dt = *dt_ns * 1e-9;
                write_dataset(import_iq_csv(in, dt, t0_ns * 1e-9), dest, wo);
            }
            out << "wrote " << dest << '\n';
            return 0;
        }

        if (waveguide->parsed()) {
            const WaveguideGeometry geom{a_mm * 1e-3, b_mm * 1e-3};
            if (modes->parsed()) {
                if (count < 1) throw ConfigError("--count must be >= 1");
                const auto list = mode_cutoffs(geom, 4, 4);
                out << "mode    cutoff (GHz)\n";
                for (int k = 0; k < count && k < static_cast<int>(list.size()); ++k) {
                    const auto& m = list[static_cast<std::size_t>(k)];
                    char line[64];
                    std::snprintf(line, sizeof line, "TE%d%d    %.6f\n", m.m, m.n, m.cutoff * 1e-9);
                    out << line;
                }
            } else if (beta->parsed()) {
                const Propagation p = propagation_constant(geom, freq_ghz * 1e9, m_idx, n_idx);
                out << json({{"mode", "TE" + std::to_string(m_idx) + std::to_string(n_idx)},
                             {"frequency_hz", freq_ghz * 1e9},
                             {p.evanescent ? "attenuation_per_m" : "beta_per_m", p.beta},
                             {"evanescent", p.evanescent}})
                           .dump(2)
                    << '\n';
            } else if (flatten->parsed()) {
                const GainTable gain = flatten_gain(read_field_profile(in, target));
                write_gain_table(gain, dest);
                out << "wrote " << dest << '\n';
            }
            return 0;
        }

        if (render->parsed()) {
            RenderOptions o;
            o.colormap = parse_colormap(colormap);
            o.clip_percentile = clip;
            o.log = log;
            const DatasetObject obj = read_dataset(in);
            if (const auto* s = std::get_if<Spectrogram>(&obj)) {
                if (!no_markers) o.vertical_markers = bare_markers(s->metadata);
                if (bandwidth && s->metadata.contains("duration_s"))
                    o.bandwidth = pulse_bandwidth(s->metadata.at("duration_s").get<double>());
                o.title = s->quantity;
                render_heatmap(*s, dest, o);
            } else if (const auto* c = std::get_if<CorrelationMap>(&obj)) {
                if (!no_markers) o.vertical_markers = bare_markers(c->metadata);
                const CorrelationPanel p = panel == "chi" ? CorrelationPanel::chi_imag : CorrelationPanel::g2;
                if (panel != "chi" && panel != "g2") throw ConfigError("--panel must be 'g2' or 'chi'");
                render_heatmap(*c, p, dest, o);
            } else if (const auto* r = std::get_if<Series>(&obj)) {
                if (!no_markers) o.vertical_markers = bare_markers(r->metadata);
                o.title = r->name;
                render_linecut(*r, dest, o);
            } else if (const auto* f = std::get_if<FloquetSweep>(&obj)) {
                Spectrogram m;
                m.row_axis = f->drive_freq;
                for (Eigen::Index k = 0; k < f->quasi_energies.cols(); ++k) m.col_axis.push_back(static_cast<double>(k));
                m.col_kind = ColumnAxis::frequency;
                m.values = f->quasi_energies;
                m.quantity = "quasi-energy (Hz) by level";
                o.title = m.quantity;
                render_heatmap(m, dest, o);
            } else {
                const auto& t = std::get<TimeTrace>(obj);
                Series s;
                s.axis_name = "time";
                s.axis_unit = "s";
                const TimeTrace amp = t.kind == TraceKind::iq ? homodyne_amplitude(t) : t;
                for (std::size_t k = 0; k < amp.size(); ++k) s.axis.push_back(amp.time(k));
                s.values = amp.values;
                s.name = to_string(amp.kind);
                render_linecut(s, dest, o);
            }
            out << "wrote " << dest << '\n';
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    err << app.help();
    return kExitUsage;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("tlsspec");
    for (const auto& a : args) argv.push_back(a.c_str());
    return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace tlsspec
