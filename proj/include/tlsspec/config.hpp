// config.hpp — JSON run configuration and (de)serialization of model types
//
// Keys carry their unit as a suffix (_hz, _s). Unknown keys are rejected so
// that a typo never silently falls back to a default.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "tlsspec/analysis.hpp"
#include "tlsspec/floquet.hpp"
#include "tlsspec/sweep.hpp"

namespace tlsspec {

inline constexpr int kConfigVersion = 1;

nlohmann::json to_json(const EnsembleSpec& spec);
nlohmann::json to_json(const DrivePulse& pulse);
nlohmann::json to_json(const GainTable& gain);
nlohmann::json to_json(const SweepPlan& plan);
nlohmann::json to_json(const FloquetOptions& options);

EnsembleSpec ensemble_from_json(const nlohmann::json& j);
DrivePulse pulse_from_json(const nlohmann::json& j);
GainTable gain_from_json(const nlohmann::json& j);
// `ensemble` and `pulse` sit beside the `sweep` object in a run config.
SweepPlan sweep_plan_from_json(const nlohmann::json& ensemble, const nlohmann::json& pulse,
                               const nlohmann::json& sweep);
FloquetOptions floquet_options_from_json(const nlohmann::json& j);

struct AnalysisConfig {
    FftWindow fft_window{FftWindow::full};
    bool fft_log_input{false};
    FftOptions fft;
    double g2_max_lag{100e-9};  // s
    ChiOptions chi;
};

nlohmann::json to_json(const AnalysisConfig& a);
AnalysisConfig analysis_from_json(const nlohmann::json& j);

struct RunConfig {
    std::string name;
    SweepPlan plan;
    FloquetOptions floquet;
    AnalysisConfig analysis;
    std::filesystem::path output;

    nlohmann::json to_json() const;
};

// Validates the whole document, including the plan, before returning.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace tlsspec
