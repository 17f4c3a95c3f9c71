// render.hpp — heatmaps and line cuts as PNG or SVG (chosen by extension).
// Drive frequency runs along x; the map's column axis runs up the y axis.

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tlsspec/analysis.hpp"

namespace tlsspec {

enum class Colormap { viridis, magma, gray };

Colormap parse_colormap(const std::string& name);

struct RenderOptions {
    Colormap colormap{Colormap::viridis};
    std::optional<double> clip_percentile;  // e.g. 99 -> colour range [p1, p99]
    bool log{false};                        // log10(|v| + floor) before colouring
    std::vector<double> vertical_markers;   // x positions (Hz), dashed white lines
    bool mark_pulse_off{true};              // horizontal dashed line at pulse-off (time maps)
    std::optional<double> bandwidth;        // Hz; white bar of this width in the top-left corner
    std::string title;
    int width{720};   // plot area, px
    int height{480};
};

// Colour range after the optional log transform and percentile clipping.
std::array<double, 2> color_range(const RMatrix& values, const RenderOptions& options);

// Linear-interpolated percentile (0..100) of all entries.
double percentile(std::vector<double> values, double p);

void render_heatmap(const Spectrogram& map, const std::filesystem::path& path, const RenderOptions& options = {});

enum class CorrelationPanel { g2, chi_imag };
void render_heatmap(const CorrelationMap& map, CorrelationPanel panel, const std::filesystem::path& path,
                    const RenderOptions& options = {});

void render_linecut(const Series& series, const std::filesystem::path& path, const RenderOptions& options = {});

}  // namespace tlsspec
