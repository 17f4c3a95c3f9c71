#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "helpers.hpp"
#include "tlsspec/sweep.hpp"

using namespace tlsspec;

namespace {

SweepPlan small_plan(std::size_t count) {
    SweepPlan plan;
    plan.spec = testing::pair(3.8e9, 4.2e9, 30e6, 2e6);
    plan.pulse_template = testing::pulse(4e9, 80e6, 5e-9);
    plan.freq_axis = {3.6e9, 4.4e9, count};
    plan.durations = {5e-9};
    plan.t_end = 15e-9;
    return plan;
}

}  // namespace

TEST_SUITE("sweep") {

TEST_CASE("frequency axis points") {
    const auto p = FrequencyAxis{3e9, 5e9, 81}.points();
    REQUIRE(p.size() == 81);
    CHECK(p.front() == 3e9);
    CHECK(p.back() == 5e9);
    CHECK(p[40] == doctest::Approx(4e9));
    CHECK(FrequencyAxis{3e9, 5e9, 1}.points() == std::vector<double>{3e9});
}

TEST_CASE("time grid lands pulse-off on a recorded sample") {
    SweepPlan plan = small_plan(3);
    for (double tau : {20e-9, 50e-9, 200e-9, 33.3e-9, 1.234e-9}) {
        plan.durations = {tau};
        plan.t_end.reset();
        const TimeGrid g = make_time_grid(plan, tau);
        CHECK(g.dt <= default_time_step(plan.freq_axis.stop) * (1 + 1e-12));
        CHECK(g.record_dt == doctest::Approx(g.dt * g.stride));
        CHECK(std::abs(g.record_dt * g.pulse_off_index - tau) < 1e-15 * tau + 1e-24);
        CHECK(g.t_end == doctest::Approx(tau + kDefaultRingdown));
        CHECK(g.record_dt <= 0.1e-9 * (1 + 1e-9));
    }
}

TEST_CASE("plan validation") {
    SweepPlan plan = small_plan(3);
    CHECK_NOTHROW(plan.validate());
    plan.realizations.count = 2;
    CHECK_THROWS_AS(plan.validate(), ConfigError);
    plan = small_plan(3);
    plan.max_dt = 1.0 / (10 * plan.freq_axis.stop);
    CHECK_THROWS_AS(plan.validate(), ConfigError);
    plan = small_plan(3);
    plan.t_end = 1e-9;
    CHECK_THROWS_AS(plan.validate(), ConfigError);
    plan = small_plan(3);
    plan.freq_axis = {4e9, 3e9, 3};
    CHECK_THROWS_AS(plan.validate(), ConfigError);
    plan = small_plan(3);
    plan.durations.clear();
    CHECK_THROWS_AS(plan.validate(), ConfigError);
}

TEST_CASE("a single-point sweep reproduces a direct evolution bit for bit") {
    SweepPlan plan = small_plan(1);
    const SweepResult r = run_frequency_sweep(plan);
    const TimeGrid g = make_time_grid(plan, 5e-9);
    DrivePulse pulse = plan.pulse_template;
    pulse.carrier = plan.freq_axis.start;
    pulse.duration = 5e-9;
    EvolveOptions opts;
    opts.record_stride = g.stride;
    const EvolutionResult direct = evolve(plan.spec, pulse, g.t_end, g.dt, std::nullopt, opts);
    REQUIRE(r.population.cols() == direct.population.size());
    for (std::size_t k = 0; k < direct.population.size(); ++k) {
        CHECK(r.population.values(0, static_cast<Eigen::Index>(k)) == direct.population[k]);
        CHECK(r.dipole.values(0, static_cast<Eigen::Index>(k)) == direct.dipole[k]);
    }
    CHECK(r.population.pulse_off_index == g.pulse_off_index);
    CHECK(r.population.col_axis[g.pulse_off_index] == doctest::Approx(5e-9));
}

TEST_CASE("an undriven uncoupled ensemble stays in its ground state") {
    SweepPlan plan = small_plan(4);
    plan.spec = testing::pair(3.8e9, 4.2e9, 0.0, 2e6);
    plan.pulse_template.amplitude = 0.0;
    const SweepResult r = run_frequency_sweep(plan);
    CHECK(r.population.values.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("results do not depend on the worker count") {
    const SweepPlan plan = small_plan(5);
    const SweepResult a = run_frequency_sweep(plan, 0, 0, {1});
    const SweepResult b = run_frequency_sweep(plan, 0, 0, {3});
    CHECK(a.population.values == b.population.values);
    CHECK(a.dipole.values == b.dipole.values);
    CHECK(a.population.metadata == b.population.metadata);
    CHECK(a.population.row_axis == FrequencyAxis{3.6e9, 4.4e9, 5}.points());
}

TEST_CASE("duration series covers every duration") {
    SweepPlan plan = small_plan(2);
    plan.durations = {2e-9, 5e-9};
    const auto series = run_duration_series(plan);
    REQUIRE(series.size() == 2);
    CHECK(series[0].duration == 2e-9);
    CHECK(series[1].duration == 5e-9);
    CHECK(series[0].population.col_axis[*series[0].population.pulse_off_index] == doctest::Approx(2e-9));
    CHECK_THROWS_AS(run_frequency_sweep(plan, 2), ConfigError);
}

TEST_CASE("disorder realizations are seeded and averaged linearly") {
    SweepPlan plan = small_plan(2);
    plan.spec.disorder = DisorderSpec{{3.8e9, 4.2e9}, {-20e6, 20e6}, 7};
    plan.realizations = {3, 100};

    const EnsembleSpec e1 = realize(plan, 1);
    EnsembleSpec manual = plan.spec;
    manual.disorder->seed = 101;
    CHECK(e1.defects[0].delta == sample_disorder(manual).defects[0].delta);

    std::vector<SweepResult> parts;
    for (std::size_t r = 0; r < 3; ++r) parts.push_back(run_frequency_sweep(plan, 0, r));
    const SweepResult avg = average_realizations(parts);
    const RMatrix want = (parts[0].population.values + parts[1].population.values + parts[2].population.values) / 3.0;
    CHECK((avg.population.values - want).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(avg.seeds == std::vector<std::uint64_t>{100, 101, 102});
    CHECK(avg.population.metadata["realizations"].size() == 3);
    CHECK(avg.population.metadata["averaged_over"] == 3);

    const auto planned = run_plan(plan);
    REQUIRE(planned.size() == 1);
    CHECK(planned[0].population.values == avg.population.values);

    parts[1].population.col_axis.pop_back();
    CHECK_THROWS_AS(average_realizations(parts), ConfigError);
    CHECK_THROWS_AS(average_realizations({}), ConfigError);
}

TEST_CASE("worker count from the environment") {
    ::unsetenv("TLSSPEC_WORKERS");
    CHECK(default_workers() == 1);
    ::setenv("TLSSPEC_WORKERS", "3", 1);
    CHECK(default_workers() == 3);
    ::setenv("TLSSPEC_WORKERS", "zero", 1);
    CHECK_THROWS_AS(default_workers(), ConfigError);
    ::unsetenv("TLSSPEC_WORKERS");
}

}  // TEST_SUITE
