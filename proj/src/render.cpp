#include "tlsspec/render.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <png.h>

namespace tlsspec {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kLine{31, 119, 180};

// 5x7 column-major glyphs for ' '..'Z'; bit 0 is the top row.
constexpr std::uint8_t kFont[][5] = {
    {0x00, 0x00, 0x00, 0x00, 0x00}, {0x00, 0x00, 0x5F, 0x00, 0x00}, {0x00, 0x07, 0x00, 0x07, 0x00},
    {0x14, 0x7F, 0x14, 0x7F, 0x14}, {0x24, 0x2A, 0x7F, 0x2A, 0x12}, {0x23, 0x13, 0x08, 0x64, 0x62},
    {0x36, 0x49, 0x56, 0x20, 0x50}, {0x00, 0x08, 0x07, 0x03, 0x00}, {0x00, 0x1C, 0x22, 0x41, 0x00},
    {0x00, 0x41, 0x22, 0x1C, 0x00}, {0x2A, 0x1C, 0x7F, 0x1C, 0x2A}, {0x08, 0x08, 0x3E, 0x08, 0x08},
    {0x00, 0x80, 0x70, 0x30, 0x00}, {0x08, 0x08, 0x08, 0x08, 0x08}, {0x00, 0x00, 0x60, 0x60, 0x00},
    {0x20, 0x10, 0x08, 0x04, 0x02}, {0x3E, 0x51, 0x49, 0x45, 0x3E}, {0x00, 0x42, 0x7F, 0x40, 0x00},
    {0x72, 0x49, 0x49, 0x49, 0x46}, {0x21, 0x41, 0x49, 0x4D, 0x33}, {0x18, 0x14, 0x12, 0x7F, 0x10},
    {0x27, 0x45, 0x45, 0x45, 0x39}, {0x3C, 0x4A, 0x49, 0x49, 0x31}, {0x41, 0x21, 0x11, 0x09, 0x07},
    {0x36, 0x49, 0x49, 0x49, 0x36}, {0x46, 0x49, 0x49, 0x29, 0x1E}, {0x00, 0x00, 0x14, 0x00, 0x00},
    {0x00, 0x40, 0x34, 0x00, 0x00}, {0x00, 0x08, 0x14, 0x22, 0x41}, {0x14, 0x14, 0x14, 0x14, 0x14},
    {0x00, 0x41, 0x22, 0x14, 0x08}, {0x02, 0x01, 0x59, 0x09, 0x06}, {0x3E, 0x41, 0x5D, 0x59, 0x4E},
    {0x7C, 0x12, 0x11, 0x12, 0x7C}, {0x7F, 0x49, 0x49, 0x49, 0x36}, {0x3E, 0x41, 0x41, 0x41, 0x22},
    {0x7F, 0x41, 0x41, 0x41, 0x3E}, {0x7F, 0x49, 0x49, 0x49, 0x41}, {0x7F, 0x09, 0x09, 0x09, 0x01},
    {0x3E, 0x41, 0x41, 0x51, 0x73}, {0x7F, 0x08, 0x08, 0x08, 0x7F}, {0x00, 0x41, 0x7F, 0x41, 0x00},
    {0x20, 0x40, 0x41, 0x3F, 0x01}, {0x7F, 0x08, 0x14, 0x22, 0x41}, {0x7F, 0x40, 0x40, 0x40, 0x40},
    {0x7F, 0x02, 0x1C, 0x02, 0x7F}, {0x7F, 0x04, 0x08, 0x10, 0x7F}, {0x3E, 0x41, 0x41, 0x41, 0x3E},
    {0x7F, 0x09, 0x09, 0x09, 0x06}, {0x3E, 0x41, 0x51, 0x21, 0x5E}, {0x7F, 0x09, 0x19, 0x29, 0x46},
    {0x26, 0x49, 0x49, 0x49, 0x32}, {0x03, 0x01, 0x7F, 0x01, 0x03}, {0x3F, 0x40, 0x40, 0x40, 0x3F},
    {0x1F, 0x20, 0x40, 0x20, 0x1F}, {0x3F, 0x40, 0x38, 0x40, 0x3F}, {0x63, 0x14, 0x08, 0x14, 0x63},
    {0x03, 0x04, 0x78, 0x04, 0x03}, {0x61, 0x59, 0x49, 0x4D, 0x43},
};

struct Canvas {
    int w;
    int h;
    std::vector<std::uint8_t> rgb;

    Canvas(int width, int height, Rgb fill) : w(width), h(height), rgb(static_cast<std::size_t>(width * height) * 3) {
        for (std::size_t i = 0; i < rgb.size(); i += 3) std::copy(fill.begin(), fill.end(), rgb.begin() + static_cast<long>(i));
    }

    void set(int x, int y, Rgb c) {
        if (x < 0 || y < 0 || x >= w || y >= h) return;
        const auto i = static_cast<std::size_t>(y * w + x) * 3;
        rgb[i] = c[0];
        rgb[i + 1] = c[1];
        rgb[i + 2] = c[2];
    }

    void fill(int x0, int y0, int x1, int y1, Rgb c) {
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) set(x, y, c);
    }

    void vline(int x, int y0, int y1, Rgb c, bool dashed) {
        for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
            if (!dashed || (y / 6) % 2 == 0) set(x, y, c);
    }

    void hline(int y, int x0, int x1, Rgb c, bool dashed) {
        for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x)
            if (!dashed || (x / 6) % 2 == 0) set(x, y, c);
    }

    void line(int x0, int y0, int x1, int y1, Rgb c) {
        const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
        const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        for (;;) {
            set(x0, y0, c);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) { err += dy; x0 += sx; }
            if (e2 <= dx) { err += dx; y0 += sy; }
        }
    }

    void blit(const Canvas& src, int x0, int y0) {
        for (int y = 0; y < src.h; ++y)
            for (int x = 0; x < src.w; ++x) {
                const auto i = static_cast<std::size_t>(y * src.w + x) * 3;
                set(x0 + x, y0 + y, {src.rgb[i], src.rgb[i + 1], src.rgb[i + 2]});
            }
    }

    // Text at scale 2 (10x14 glyph cells, 12 px advance). `anchor` 0 left, 1 centre, 2 right.
    void text(int x, int y, const std::string& s, Rgb c, int anchor = 0, bool vertical = false) {
        constexpr int scale = 2;
        constexpr int advance = 6 * scale;
        const int len = static_cast<int>(s.size()) * advance;
        int offset = anchor == 0 ? 0 : anchor == 1 ? -len / 2 : -len;
        for (unsigned char ch : s) {
            int code = std::toupper(ch);
            if (code < 0x20 || code > 0x5A) code = '?';
            const auto& glyph = kFont[code - 0x20];
            for (int col = 0; col < 5; ++col)
                for (int row = 0; row < 7; ++row) {
                    if (!((glyph[col] >> row) & 1)) continue;
                    for (int a = 0; a < scale; ++a)
                        for (int b = 0; b < scale; ++b) {
                            const int gx = offset + col * scale + a;
                            const int gy = row * scale + b;
                            if (vertical) set(x + gy, y - gx, c);
                            else set(x + gx, y + gy, c);
                        }
                }
            offset += advance;
        }
    }
};

void png_append(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

std::vector<std::uint8_t> encode_png(const Canvas& c) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) throw IoError(IoError::Kind::unwritable, "libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> out;
    if (info == nullptr || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(IoError::Kind::unwritable, "PNG encoding failed");
    }
    png_set_write_fn(png, &out, png_append, nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(c.w), static_cast<png_uint_32>(c.h), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < c.h; ++y)
        png_write_row(png, const_cast<png_bytep>(c.rgb.data() + static_cast<std::size_t>(y * c.w) * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

std::string base64(const std::vector<std::uint8_t>& data) {
    static constexpr char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < data.size(); i += 3) {
        std::uint32_t v = static_cast<std::uint32_t>(data[i]) << 16;
        if (i + 1 < data.size()) v |= static_cast<std::uint32_t>(data[i + 1]) << 8;
        if (i + 2 < data.size()) v |= data[i + 2];
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += i + 1 < data.size() ? table[(v >> 6) & 63] : '=';
        out += i + 2 < data.size() ? table[v & 63] : '=';
    }
    return out;
}

Rgb colormap(Colormap map, double t) {
    static const std::array<Rgb, 9> viridis{{{68, 1, 84}, {71, 44, 122}, {59, 81, 139}, {44, 113, 142}, {33, 144, 141},
                                             {39, 173, 129}, {92, 200, 99}, {170, 220, 50}, {253, 231, 37}}};
    static const std::array<Rgb, 9> magma{{{0, 0, 4}, {28, 16, 68}, {79, 18, 123}, {129, 37, 129}, {181, 54, 122},
                                           {229, 80, 100}, {251, 135, 97}, {254, 194, 135}, {252, 253, 191}}};
    t = std::clamp(t, 0.0, 1.0);
    if (map == Colormap::gray) {
        const auto g = static_cast<std::uint8_t>(std::lround(255.0 * t));
        return {g, g, g};
    }
    const auto& lut = map == Colormap::viridis ? viridis : magma;
    const double x = t * 8.0;
    const auto k = std::min<std::size_t>(7, static_cast<std::size_t>(x));
    const double f = x - static_cast<double>(k);
    Rgb c{};
    for (int i = 0; i < 3; ++i)
        c[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(
            std::lround(lut[k][static_cast<std::size_t>(i)] * (1.0 - f) + lut[k + 1][static_cast<std::size_t>(i)] * f));
    return c;
}

struct UnitScale {
    double factor;
    std::string label;
};

UnitScale unit_scale(const std::string& unit, double magnitude) {
    if (unit == "Hz") {
        if (magnitude >= 1e9) return {1e-9, "GHz"};
        if (magnitude >= 1e6) return {1e-6, "MHz"};
        if (magnitude >= 1e3) return {1e-3, "kHz"};
        return {1.0, "Hz"};
    }
    if (unit == "s") {
        if (magnitude < 1e-6) return {1e9, "ns"};
        if (magnitude < 1e-3) return {1e6, "us"};
        if (magnitude < 1.0) return {1e3, "ms"};
        return {1.0, "s"};
    }
    return {1.0, unit};
}

std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
    std::vector<double> ticks;
    if (!(hi > lo)) {
        ticks.push_back(lo);
        return ticks;
    }
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step)
        ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return ticks;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

struct Axis {
    std::vector<double> values;
    std::string name;
    std::string unit;
    double lo{0.0};
    double hi{1.0};
};

Axis make_axis(std::vector<double> values, std::string name, std::string unit) {
    Axis a{std::move(values), std::move(name), std::move(unit)};
    if (a.values.empty()) throw ConfigError("cannot render an empty axis");
    const double half = a.values.size() > 1 ? 0.5 * (a.values[1] - a.values[0]) : 0.5 * std::max(1.0, std::abs(a.values[0]));
    const double half_end = a.values.size() > 1 ? 0.5 * (a.values.back() - a.values[a.values.size() - 2]) : half;
    a.lo = a.values.front() - half;
    a.hi = a.values.back() + half_end;
    return a;
}

std::size_t nearest(const std::vector<double>& axis, double x) {
    const auto it = std::lower_bound(axis.begin(), axis.end(), x);
    if (it == axis.begin()) return 0;
    if (it == axis.end()) return axis.size() - 1;
    const auto i = static_cast<std::size_t>(it - axis.begin());
    return (x - axis[i - 1]) <= (axis[i] - x) ? i - 1 : i;
}

// Plot image plus everything needed to decorate it in either back end.
struct Figure {
    Canvas plot;
    std::optional<Canvas> colorbar;
    std::array<double, 2> range{0.0, 1.0};
    Axis x;
    Axis y;
    std::string title;
    std::string value_label;
};

constexpr int kLeft = 110, kRight = 130, kTop = 40, kBottom = 80;

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoError::Kind::unwritable, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(IoError::Kind::unwritable, "short write to " + path.string());
}

std::string label_with_unit(const Axis& a, const UnitScale& s) {
    return s.label.empty() ? a.name : a.name + " (" + s.label + ")";
}

std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void emit(const Figure& fig, const std::filesystem::path& path) {
    const int pw = fig.plot.w, ph = fig.plot.h;
    const int W = kLeft + pw + kRight, H = kTop + ph + kBottom;
    const UnitScale xs = unit_scale(fig.x.unit, std::max(std::abs(fig.x.lo), std::abs(fig.x.hi)));
    const UnitScale ys = unit_scale(fig.y.unit, std::max(std::abs(fig.y.lo), std::abs(fig.y.hi)));
    auto px = [&](double v) { return kLeft + static_cast<int>(std::lround((v - fig.x.lo) / (fig.x.hi - fig.x.lo) * pw)); };
    auto py = [&](double v) { return kTop + ph - static_cast<int>(std::lround((v - fig.y.lo) / (fig.y.hi - fig.y.lo) * ph)); };
    const auto xt = nice_ticks(fig.x.lo * xs.factor, fig.x.hi * xs.factor);
    const auto yt = nice_ticks(fig.y.lo * ys.factor, fig.y.hi * ys.factor);
    const auto ct = nice_ticks(fig.range[0], fig.range[1], 5);
    const int cbx = kLeft + pw + 20;
    auto cby = [&](double v) {
        const double span = fig.range[1] - fig.range[0];
        return kTop + ph - static_cast<int>(std::lround(span > 0 ? (v - fig.range[0]) / span * ph : 0.5 * ph));
    };

    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png") {
        Canvas c(W, H, kWhite);
        c.blit(fig.plot, kLeft, kTop);
        c.hline(kTop - 1, kLeft - 1, kLeft + pw, kBlack, false);
        c.hline(kTop + ph, kLeft - 1, kLeft + pw, kBlack, false);
        c.vline(kLeft - 1, kTop - 1, kTop + ph, kBlack, false);
        c.vline(kLeft + pw, kTop - 1, kTop + ph, kBlack, false);
        for (double t : xt) {
            const int x = px(t / xs.factor);
            c.vline(x, kTop + ph, kTop + ph + 6, kBlack, false);
            c.text(x, kTop + ph + 10, tick_label(t), kBlack, 1);
        }
        for (double t : yt) {
            const int y = py(t / ys.factor);
            c.hline(y, kLeft - 7, kLeft - 1, kBlack, false);
            c.text(kLeft - 10, y - 7, tick_label(t), kBlack, 2);
        }
        c.text(kLeft + pw / 2, H - 30, label_with_unit(fig.x, xs), kBlack, 1);
        c.text(20, kTop + ph / 2, label_with_unit(fig.y, ys), kBlack, 1, true);
        if (!fig.title.empty()) c.text(kLeft + pw / 2, 12, fig.title, kBlack, 1);
        if (fig.colorbar) {
            c.blit(*fig.colorbar, cbx, kTop);
            for (double t : ct) {
                const int y = cby(t);
                c.hline(y, cbx + fig.colorbar->w, cbx + fig.colorbar->w + 5, kBlack, false);
                c.text(cbx + fig.colorbar->w + 8, y - 7, tick_label(t), kBlack);
            }
        }
        const auto bytes = encode_png(c);
        write_file(path, std::string(bytes.begin(), bytes.end()));
        return;
    }
    if (ext != ".svg") throw ConfigError("render: unsupported image extension '" + ext + "' (use .png or .svg)");

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" width=\"" << W
      << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
    s << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    s << "<image x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" preserveAspectRatio=\"none\" style=\"image-rendering:pixelated\" xlink:href=\"data:image/png;base64,"
      << base64(encode_png(fig.plot)) << "\"/>\n";
    s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : xt) {
        const int x = px(t / xs.factor);
        s << "<line x1=\"" << x << "\" y1=\"" << kTop + ph << "\" x2=\"" << x << "\" y2=\"" << kTop + ph + 6
          << "\" stroke=\"black\"/><text x=\"" << x << "\" y=\"" << kTop + ph + 22 << "\" text-anchor=\"middle\">"
          << tick_label(t) << "</text>\n";
    }
    for (double t : yt) {
        const int y = py(t / ys.factor);
        s << "<line x1=\"" << kLeft - 6 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\"" << y
          << "\" stroke=\"black\"/><text x=\"" << kLeft - 10 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
          << tick_label(t) << "</text>\n";
    }
    s << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << H - 25 << "\" text-anchor=\"middle\">"
      << svg_escape(label_with_unit(fig.x, xs)) << "</text>\n";
    s << "<text transform=\"translate(30," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << svg_escape(label_with_unit(fig.y, ys)) << "</text>\n";
    if (!fig.title.empty())
        s << "<text x=\"" << kLeft + pw / 2 << "\" y=\"24\" text-anchor=\"middle\">" << svg_escape(fig.title) << "</text>\n";
    if (fig.colorbar) {
        s << "<image x=\"" << cbx << "\" y=\"" << kTop << "\" width=\"" << fig.colorbar->w << "\" height=\"" << ph
          << "\" preserveAspectRatio=\"none\" xlink:href=\"data:image/png;base64," << base64(encode_png(*fig.colorbar))
          << "\"/>\n";
        for (double t : ct) {
            const int y = cby(t);
            s << "<text x=\"" << cbx + fig.colorbar->w + 6 << "\" y=\"" << y + 4 << "\">" << tick_label(t) << "</text>\n";
        }
        if (!fig.value_label.empty())
            s << "<text transform=\"translate(" << W - 12 << "," << kTop + ph / 2
              << ") rotate(-90)\" text-anchor=\"middle\">" << svg_escape(fig.value_label) << "</text>\n";
    }
    s << "</svg>\n";
    write_file(path, s.str());
}

void check_finite(const RMatrix& values) {
    if (values.size() == 0) throw ConfigError("render: empty map");
    if (!values.allFinite()) throw ConfigError("render: map contains non-finite values");
}

RMatrix transformed(const RMatrix& values, bool log) {
    if (!log) return values;
    const double peak = values.cwiseAbs().maxCoeff();
    const double floor = peak > 0.0 ? kLogFloor * peak : 1.0;
    return (values.cwiseAbs().array() + floor).log10().matrix();
}

Figure heatmap_figure(const RMatrix& values, Axis x, Axis y, const RenderOptions& options) {
    check_finite(values);
    if (options.width < 16 || options.height < 16) throw ConfigError("render: plot area too small");
    Figure fig{Canvas(options.width, options.height, kBlack), std::nullopt, color_range(values, options),
               std::move(x), std::move(y), options.title, options.log ? "log10 |value|" : "value"};
    const RMatrix v = transformed(values, options.log);
    const double lo = fig.range[0], hi = fig.range[1];
    const int pw = options.width, ph = options.height;
    std::vector<std::size_t> col_of(static_cast<std::size_t>(ph));
    for (int py = 0; py < ph; ++py) {
        const double yv = fig.y.lo + (static_cast<double>(ph - 1 - py) + 0.5) / ph * (fig.y.hi - fig.y.lo);
        col_of[static_cast<std::size_t>(py)] = nearest(fig.y.values, yv);
    }
    for (int px = 0; px < pw; ++px) {
        const double xv = fig.x.lo + (static_cast<double>(px) + 0.5) / pw * (fig.x.hi - fig.x.lo);
        const auto row = static_cast<Eigen::Index>(nearest(fig.x.values, xv));
        for (int py = 0; py < ph; ++py) {
            const double val = v(row, static_cast<Eigen::Index>(col_of[static_cast<std::size_t>(py)]));
            fig.plot.set(px, py, colormap(options.colormap, hi > lo ? (val - lo) / (hi - lo) : 0.5));
        }
    }
    for (double m : options.vertical_markers) {
        if (m < fig.x.lo || m > fig.x.hi) continue;
        fig.plot.vline(static_cast<int>(std::lround((m - fig.x.lo) / (fig.x.hi - fig.x.lo) * pw)), 0, ph - 1, kWhite, true);
    }
    if (options.bandwidth) {
        const int len = static_cast<int>(std::lround(*options.bandwidth / (fig.x.hi - fig.x.lo) * pw));
        fig.plot.fill(10, 10, 10 + std::max(1, len), 14, kWhite);
    }
    Canvas bar(18, ph, kBlack);
    for (int py = 0; py < ph; ++py) {
        const Rgb c = colormap(options.colormap, static_cast<double>(ph - 1 - py) / std::max(1, ph - 1));
        bar.hline(py, 0, bar.w - 1, c, false);
    }
    fig.colorbar = std::move(bar);
    return fig;
}

void mark_horizontal(Figure& fig, double y) {
    if (y < fig.y.lo || y > fig.y.hi) return;
    const int ph = fig.plot.h;
    const int row = ph - 1 - static_cast<int>(std::lround((y - fig.y.lo) / (fig.y.hi - fig.y.lo) * (ph - 1)));
    fig.plot.hline(row, 0, fig.plot.w - 1, kWhite, true);
}

}  // namespace

Colormap parse_colormap(const std::string& name) {
    if (name == "viridis") return Colormap::viridis;
    if (name == "magma") return Colormap::magma;
    if (name == "gray" || name == "grey") return Colormap::gray;
    throw ConfigError("unknown colormap '" + name + "' (viridis, magma, gray)");
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw ConfigError("percentile of an empty set");
    if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("percentile must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(values.size() - 1, lo + 1);
    return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::array<double, 2> color_range(const RMatrix& values, const RenderOptions& options) {
    check_finite(values);
    const RMatrix v = transformed(values, options.log);
    if (!options.clip_percentile) return {v.minCoeff(), v.maxCoeff()};
    const double p = *options.clip_percentile;
    if (!(p > 50.0 && p <= 100.0)) throw ConfigError("clip_percentile must lie in (50, 100]");
    std::vector<double> all(v.data(), v.data() + v.size());
    return {percentile(all, 100.0 - p), percentile(all, p)};
}

void render_heatmap(const Spectrogram& map, const std::filesystem::path& path, const RenderOptions& options) {
    map.validate();
    const bool time = map.col_kind == ColumnAxis::time;
    Figure fig = heatmap_figure(map.values, make_axis(map.row_axis, "drive frequency", "Hz"),
                                make_axis(map.col_axis, time ? "time" : "frequency", time ? "s" : "Hz"), options);
    if (fig.value_label == "value") fig.value_label = map.quantity;
    if (time && options.mark_pulse_off && map.pulse_off_index && *map.pulse_off_index < map.col_axis.size())
        mark_horizontal(fig, map.col_axis[*map.pulse_off_index]);
    emit(fig, path);
}

void render_heatmap(const CorrelationMap& map, CorrelationPanel panel, const std::filesystem::path& path,
                    const RenderOptions& options) {
    map.validate();
    if (panel == CorrelationPanel::g2) {
        Figure fig = heatmap_figure(map.g2, make_axis(map.row_axis, "drive frequency", "Hz"),
                                    make_axis(map.lag_axis, "lag", "s"), options);
        fig.value_label = "g2";
        emit(fig, path);
        return;
    }
    if (!map.chi_imag) throw ConfigError("render: chi'' has not been computed for this map");
    Figure fig = heatmap_figure(*map.chi_imag, make_axis(map.row_axis, "drive frequency", "Hz"),
                                make_axis(map.omega_axis, "omega", "Hz"), options);
    fig.value_label = "chi''";
    emit(fig, path);
}

void render_linecut(const Series& series, const std::filesystem::path& path, const RenderOptions& options) {
    if (series.values.empty() || series.values.size() != series.axis.size()) throw ConfigError("render: empty series");
    for (double v : series.values) {
        if (!std::isfinite(v)) throw ConfigError("render: series contains non-finite values");
    }
    Axis x = make_axis(series.axis, series.axis_name, series.axis_unit);
    x.lo = series.axis.front();
    x.hi = series.axis.size() > 1 ? series.axis.back() : series.axis.front() + 1.0;
    double lo = *std::min_element(series.values.begin(), series.values.end());
    double hi = *std::max_element(series.values.begin(), series.values.end());
    const double pad = hi > lo ? 0.05 * (hi - lo) : std::max(1.0, std::abs(hi)) * 0.05;
    Axis y{{lo - pad, hi + pad}, series.name, "", lo - pad, hi + pad};
    Figure fig{Canvas(options.width, options.height, kWhite), std::nullopt, {lo, hi}, std::move(x), std::move(y),
               options.title, series.name};
    const int pw = options.width, ph = options.height;
    auto to_px = [&](std::size_t i) {
        return std::array<int, 2>{
            static_cast<int>(std::lround((series.axis[i] - fig.x.lo) / (fig.x.hi - fig.x.lo) * (pw - 1))),
            ph - 1 - static_cast<int>(std::lround((series.values[i] - fig.y.lo) / (fig.y.hi - fig.y.lo) * (ph - 1)))};
    };
    for (std::size_t i = 0; i + 1 < series.values.size(); ++i) {
        const auto a = to_px(i), b = to_px(i + 1);
        fig.plot.line(a[0], a[1], b[0], b[1], kLine);
    }
    if (series.values.size() == 1) {
        const auto a = to_px(0);
        fig.plot.fill(a[0] - 2, a[1] - 2, a[0] + 3, a[1] + 3, kLine);
    }
    for (double m : options.vertical_markers) {
        if (m < fig.x.lo || m > fig.x.hi) continue;
        fig.plot.vline(static_cast<int>(std::lround((m - fig.x.lo) / (fig.x.hi - fig.x.lo) * (pw - 1))), 0, ph - 1,
                       {150, 150, 150}, true);
    }
    emit(fig, path);
}

}  // namespace tlsspec
