// sweep.hpp — drive-frequency, pulse-duration and disorder-realization sweeps

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "tlsspec/analysis.hpp"
#include "tlsspec/lindblad.hpp"

namespace tlsspec {

struct FrequencyAxis {
    double start{0.0};  // Hz
    double stop{0.0};   // Hz
    std::size_t count{1};

    std::vector<double> points() const;
};

struct Realizations {
    std::size_t count{1};
    std::uint64_t base_seed{0};  // realization r draws disorder with seed base_seed + r
};

inline constexpr double kDefaultRingdown = 600e-9;  // s appended after the pulse when t_end is unset

struct SweepPlan {
    EnsembleSpec spec;
    DrivePulse pulse_template;  // carrier and duration are overridden per point
    FrequencyAxis freq_axis;
    std::vector<double> durations;  // s
    std::optional<double> t_end;    // s; default duration + kDefaultRingdown
    Realizations realizations;
    std::optional<double> max_dt;              // s; default 1/(50 stop)
    std::optional<double> record_interval;     // s; default 0.1 ns

    void validate() const;
    double end_time(double duration) const;
};

// Integration grid shared by every row of one duration: the record interval
// divides the pulse duration exactly, so pulse-off is a recorded sample.
struct TimeGrid {
    double dt{0.0};
    std::size_t stride{1};
    double record_dt{0.0};
    std::size_t pulse_off_index{0};
    double t_end{0.0};
    std::size_t samples{0};
};

TimeGrid make_time_grid(const SweepPlan& plan, double duration);

struct SweepOptions {
    std::size_t workers{1};
};

struct SweepResult {
    double duration{0.0};
    Spectrogram population;  // <S+ S->, rows = drive frequency, cols = time
    Spectrogram dipole;      // <P>
    std::vector<std::uint64_t> seeds;
    std::vector<double> wall_time;  // s per drive frequency (summed over realizations)
};

// Ensemble actually simulated for realization r (disorder drawn if present).
EnsembleSpec realize(const SweepPlan& plan, std::size_t realization);

SweepResult run_frequency_sweep(const SweepPlan& plan, std::size_t duration_index = 0,
                                std::size_t realization = 0, const SweepOptions& options = {});

std::vector<SweepResult> run_duration_series(const SweepPlan& plan, std::size_t realization = 0,
                                             const SweepOptions& options = {});

SweepResult average_realizations(const std::vector<SweepResult>& results);

// Every duration, averaged over every realization.
std::vector<SweepResult> run_plan(const SweepPlan& plan, const SweepOptions& options = {});

// Default worker count from TLSSPEC_WORKERS, else 1.
std::size_t default_workers();

}  // namespace tlsspec
