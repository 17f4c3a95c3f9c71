#include "tlsspec/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "tlsspec/config.hpp"

namespace tlsspec {

namespace {

constexpr double kDefaultRecordInterval = 0.1e-9;

[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context) {
    const std::string what = context + ": " + e.what();
    switch (e.category()) {
        case ErrorCategory::config: throw ConfigError(what);
        case ErrorCategory::numeric: throw NumericError(what);
        case ErrorCategory::io: throw IoError(static_cast<const IoError&>(e).kind(), what);
    }
    throw Error(e.category(), what);
}

std::vector<double> time_axis(const TimeGrid& grid) {
    std::vector<double> axis(grid.samples);
    for (std::size_t k = 0; k < axis.size(); ++k) axis[k] = static_cast<double>(k) * grid.record_dt;
    return axis;
}

nlohmann::json grid_json(const TimeGrid& g) {
    return {{"dt_s", g.dt},
            {"record_stride", g.stride},
            {"record_dt_s", g.record_dt},
            {"pulse_off_index", g.pulse_off_index},
            {"t_end_s", g.t_end},
            {"samples", g.samples}};
}

}  // namespace

std::vector<double> FrequencyAxis::points() const {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = start;
        return out;
    }
    const double step = (stop - start) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = start + static_cast<double>(i) * step;
    out.back() = stop;
    return out;
}

void SweepPlan::validate() const {
    spec.validate();
    if (freq_axis.count < 1) throw ConfigError("frequency axis needs count >= 1");
    if (!(freq_axis.start > 0.0) || !(freq_axis.start < freq_axis.stop) || !std::isfinite(freq_axis.stop))
        throw ConfigError("frequency axis needs 0 < start < stop");
    if (durations.empty()) throw ConfigError("sweep needs at least one pulse duration");
    for (double d : durations) {
        if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("pulse durations must be > 0");
    }
    if (t_end) {
        const double longest = *std::max_element(durations.begin(), durations.end());
        if (!(*t_end >= longest)) throw ConfigError("t_end must be >= the longest pulse duration");
    }
    if (realizations.count < 1) throw ConfigError("realization count must be >= 1");
    if (realizations.count > 1 && !spec.disorder)
        throw ConfigError("several realizations requested but the ensemble has no disorder");
    if (max_dt) {
        if (!(*max_dt > 0.0)) throw ConfigError("max_dt must be > 0");
        if (*max_dt > 1.0 / (20.0 * freq_axis.stop))
            throw ConfigError("max_dt does not resolve the highest carrier (need <= 1/(20 stop))");
    }
    if (record_interval && !(*record_interval > 0.0)) throw ConfigError("record interval must be > 0");
    DrivePulse probe = pulse_template;
    probe.carrier = freq_axis.start;
    probe.duration = durations.front();
    probe.validate();
}

double SweepPlan::end_time(double duration) const { return t_end ? *t_end : duration + kDefaultRingdown; }

TimeGrid make_time_grid(const SweepPlan& plan, double duration) {
    const double dt_max = plan.max_dt.value_or(default_time_step(plan.freq_axis.stop));
    const double interval = plan.record_interval.value_or(kDefaultRecordInterval);
    TimeGrid g;
    g.stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(interval / dt_max + 1e-9)));
    const double coarse = dt_max * static_cast<double>(g.stride);
    g.pulse_off_index = static_cast<std::size_t>(std::ceil(duration / coarse - 1e-9));
    g.record_dt = duration / static_cast<double>(g.pulse_off_index);
    g.dt = g.record_dt / static_cast<double>(g.stride);
    g.t_end = plan.end_time(duration);
    const auto steps = static_cast<std::size_t>(std::ceil(g.t_end / g.dt - 1e-9));
    g.samples = steps / g.stride + 1;
    return g;
}

EnsembleSpec realize(const SweepPlan& plan, std::size_t realization) {
    if (!plan.spec.disorder) return plan.spec;
    EnsembleSpec spec = plan.spec;
    spec.disorder->seed = plan.realizations.base_seed + realization;
    return sample_disorder(spec);
}

SweepResult run_frequency_sweep(const SweepPlan& plan, std::size_t duration_index, std::size_t realization,
                                const SweepOptions& options) {
    plan.validate();
    if (duration_index >= plan.durations.size()) throw ConfigError("duration index out of range");
    if (realization >= plan.realizations.count) throw ConfigError("realization index out of range");

    const double duration = plan.durations[duration_index];
    const EnsembleSpec spec = realize(plan, realization);
    const TimeGrid grid = make_time_grid(plan, duration);
    const std::vector<double> freqs = plan.freq_axis.points();
    const std::size_t rows = freqs.size();

    RMatrix population(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(grid.samples));
    RMatrix dipole(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(grid.samples));
    std::vector<double> wall(rows, 0.0);

    EvolveOptions evolve_options;
    evolve_options.record_stride = grid.stride;

    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    std::size_t failed_index = rows;
    std::exception_ptr failure;

    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= rows) return;
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (failure) return;
            }
            try {
                DrivePulse pulse = plan.pulse_template;
                pulse.carrier = freqs[i];
                pulse.duration = duration;
                const auto t0 = std::chrono::steady_clock::now();
                const EvolutionResult r = evolve(spec, pulse, grid.t_end, grid.dt, std::nullopt, evolve_options);
                wall[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                if (r.population.size() != grid.samples || r.pulse_off_index != grid.pulse_off_index)
                    throw NumericError("evolution grid differs from the sweep grid");
                const auto row = static_cast<Eigen::Index>(i);
                for (std::size_t k = 0; k < grid.samples; ++k) {
                    population(row, static_cast<Eigen::Index>(k)) = r.population[k];
                    dipole(row, static_cast<Eigen::Index>(k)) = r.dipole[k];
                }
                if (!population.row(row).allFinite() || !dipole.row(row).allFinite())
                    throw NumericError("non-finite observable");
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure || i < failed_index) {
                    failure = std::current_exception();
                    failed_index = i;
                }
                return;
            }
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, rows));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) {
        std::ostringstream os;
        os << "sweep point " << failed_index << " (drive " << freqs[failed_index] << " Hz, tau " << duration
           << " s)";
        try {
            std::rethrow_exception(failure);
        } catch (const Error& e) {
            rethrow_with_context(e, os.str());
        } catch (const std::exception& e) {
            throw NumericError(os.str() + ": " + e.what());
        }
    }

    SweepResult result;
    result.duration = duration;
    if (plan.spec.disorder) result.seeds.push_back(plan.realizations.base_seed + realization);
    result.wall_time = std::move(wall);

    nlohmann::json meta = {{"plan", to_json(plan)},
                           {"duration_s", duration},
                           {"grid", grid_json(grid)},
                           {"realizations",
                            nlohmann::json::array({{{"index", realization},
                                                    {"seed", plan.spec.disorder ? nlohmann::json(plan.realizations.base_seed + realization) : nlohmann::json(nullptr)},
                                                    {"ensemble", to_json(spec)},
                                                    {"bare_frequencies_hz", bare_transition_frequencies(spec)}}})}};

    const std::vector<double> times = time_axis(grid);
    auto make_map = [&](RMatrix values, const char* quantity) {
        Spectrogram map;
        map.row_axis = freqs;
        map.col_axis = times;
        map.col_kind = ColumnAxis::time;
        map.values = std::move(values);
        map.pulse_off_index = grid.pulse_off_index;
        map.quantity = quantity;
        map.metadata = meta;
        return map;
    };
    result.population = make_map(std::move(population), "population");
    result.dipole = make_map(std::move(dipole), "dipole");
    return result;
}

std::vector<SweepResult> run_duration_series(const SweepPlan& plan, std::size_t realization,
                                             const SweepOptions& options) {
    plan.validate();
    std::vector<SweepResult> out;
    out.reserve(plan.durations.size());
    for (std::size_t d = 0; d < plan.durations.size(); ++d)
        out.push_back(run_frequency_sweep(plan, d, realization, options));
    return out;
}

SweepResult average_realizations(const std::vector<SweepResult>& results) {
    if (results.empty()) throw ConfigError("average_realizations needs at least one result");
    const SweepResult& first = results.front();
    SweepResult out = first;
    if (results.size() == 1) return out;
    nlohmann::json realizations = first.population.metadata.value("realizations", nlohmann::json::array());
    for (std::size_t i = 1; i < results.size(); ++i) {
        const SweepResult& r = results[i];
        if (r.population.row_axis != first.population.row_axis || r.population.col_axis != first.population.col_axis ||
            r.dipole.col_axis != first.dipole.col_axis || r.population.pulse_off_index != first.population.pulse_off_index)
            throw ConfigError("average_realizations: results do not share axes");
        out.population.values += r.population.values;
        out.dipole.values += r.dipole.values;
        for (std::size_t k = 0; k < out.wall_time.size(); ++k) out.wall_time[k] += r.wall_time[k];
        out.seeds.insert(out.seeds.end(), r.seeds.begin(), r.seeds.end());
        for (const auto& entry : r.population.metadata.value("realizations", nlohmann::json::array()))
            realizations.push_back(entry);
    }
    const double n = static_cast<double>(results.size());
    out.population.values /= n;
    out.dipole.values /= n;
    for (Spectrogram* map : {&out.population, &out.dipole}) {
        map->metadata["realizations"] = realizations;
        map->metadata["averaged_over"] = results.size();
    }
    return out;
}

std::vector<SweepResult> run_plan(const SweepPlan& plan, const SweepOptions& options) {
    plan.validate();
    std::vector<SweepResult> out;
    for (std::size_t d = 0; d < plan.durations.size(); ++d) {
        std::vector<SweepResult> per_seed;
        for (std::size_t r = 0; r < plan.realizations.count; ++r)
            per_seed.push_back(run_frequency_sweep(plan, d, r, options));
        out.push_back(average_realizations(per_seed));
    }
    return out;
}

std::size_t default_workers() {
    const char* env = std::getenv("TLSSPEC_WORKERS");
    if (env == nullptr || *env == '\0') return 1;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) throw ConfigError("TLSSPEC_WORKERS must be a positive integer");
    return static_cast<std::size_t>(v);
}

}  // namespace tlsspec
