// dataset.hpp — on-disk datasets: a directory holding manifest.json and one
// headerless little-endian binary file per array (.f64 or interleaved .c128).

#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include <json.hpp>

#include "tlsspec/analysis.hpp"
#include "tlsspec/floquet.hpp"

namespace tlsspec {

inline constexpr int kDatasetVersion = 1;
inline constexpr const char* kToolVersion = "tlsspec 1.0.0";

enum class DatasetKind { time_trace, spectrogram, g2_map, chi_map, floquet_spectrum, series };

std::string to_string(DatasetKind kind);

using DatasetObject = std::variant<TimeTrace, Spectrogram, CorrelationMap, FloquetSweep, Series>;

DatasetKind kind_of(const DatasetObject& obj);

struct WriteOptions {
    bool force{false};  // replace an existing dataset directory
};

nlohmann::json write_dataset(const DatasetObject& obj, const std::filesystem::path& dir,
                             const WriteOptions& options = {});

DatasetObject read_dataset(const std::filesystem::path& dir);

// Typed readers; IoError(schema) when the stored kind differs.
TimeTrace read_time_trace(const std::filesystem::path& dir);
Spectrogram read_spectrogram(const std::filesystem::path& dir);
CorrelationMap read_correlation_map(const std::filesystem::path& dir);
FloquetSweep read_floquet_sweep(const std::filesystem::path& dir);
Series read_series(const std::filesystem::path& dir);

// Structural check of a manifest against the published schema
// (docs/manifest.schema.json). Throws IoError with the matching kind.
void validate_manifest(const nlohmann::json& manifest);

nlohmann::json read_manifest(const std::filesystem::path& dir);

}  // namespace tlsspec
