// csv.hpp — comma-separated ingestion of measured IQ records and field
// profiles, and export of gain tables. Header row mandatory, '.' decimal.

#pragma once

#include <filesystem>
#include <optional>

#include "tlsspec/analysis.hpp"
#include "tlsspec/waveguide.hpp"

namespace tlsspec {

// Columns `i, q` (uniform grid from dt/t0) or `t, i, q` (grid inferred from
// t; timestamps may jitter by at most 1e-6 of the mean step).
TimeTrace import_iq_csv(const std::filesystem::path& path, std::optional<double> dt = std::nullopt,
                        double t0 = 0.0);

void write_iq_csv(const TimeTrace& trace, const std::filesystem::path& path, bool with_time = true);

// Columns `freq_hz, mean_field`; the target is supplied separately.
FieldProfile read_field_profile(const std::filesystem::path& path, double target);

void write_gain_table(const GainTable& gain, const std::filesystem::path& path);

}  // namespace tlsspec
