#include "tlsspec/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace tlsspec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";

[[noreturn]] void fail(IoError::Kind kind, const std::string& what) { throw IoError(kind, what); }

// ---- raw binary -----------------------------------------------------------

void put_le(std::vector<unsigned char>& buf, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xffu));
}

double get_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

void write_bytes(const fs::path& file, const std::vector<unsigned char>& buf) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) fail(IoError::Kind::unwritable, "cannot create " + file.string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) fail(IoError::Kind::unwritable, "short write to " + file.string());
}

std::vector<unsigned char> read_bytes(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail(IoError::Kind::not_found, "missing array file " + file.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d / 16)
            fail(IoError::Kind::shape_mismatch, "array shape overflows");
        n *= d;
    }
    return n;
}

// ---- writer ---------------------------------------------------------------

class Writer {
public:
    explicit Writer(fs::path dir) : dir_(std::move(dir)) {}

    void real(const std::string& name, const double* data, std::vector<std::size_t> shape) {
        const std::size_t n = element_count(shape);
        std::vector<unsigned char> buf;
        buf.reserve(8 * n);
        for (std::size_t i = 0; i < n; ++i) put_le(buf, data[i]);
        add(name, name + ".f64", shape, "f64", buf);
    }

    void complex(const std::string& name, const cplx* data, std::vector<std::size_t> shape) {
        const std::size_t n = element_count(shape);
        std::vector<unsigned char> buf;
        buf.reserve(16 * n);
        for (std::size_t i = 0; i < n; ++i) {
            put_le(buf, data[i].real());
            put_le(buf, data[i].imag());
        }
        add(name, name + ".c128", shape, "c128", buf);
    }

    json arrays = json::array();

private:
    void add(const std::string& name, const std::string& file, const std::vector<std::size_t>& shape,
             const char* dtype, const std::vector<unsigned char>& buf) {
        write_bytes(dir_ / file, buf);
        arrays.push_back({{"name", name}, {"file", file}, {"shape", shape}, {"dtype", dtype}});
    }
    fs::path dir_;
};

json explicit_axis(const std::string& name, const std::string& unit, const std::vector<double>& values) {
    return {{"name", name}, {"unit", unit}, {"count", values.size()}, {"values", values}};
}

json uniform_axis(const std::string& name, const std::string& unit, double start, double step, std::size_t count) {
    return {{"name", name}, {"unit", unit}, {"start", start}, {"step", step}, {"count", count}};
}

void prepare_directory(const fs::path& dir, bool force) {
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!force) fail(IoError::Kind::exists, "dataset " + dir.string() + " already exists (use --force)");
        if (!fs::is_directory(dir)) fail(IoError::Kind::exists, dir.string() + " exists and is not a directory");
        const bool empty = fs::is_empty(dir, ec);
        if (!empty && !fs::exists(dir / kManifest))
            fail(IoError::Kind::exists, dir.string() + " is not a dataset directory; refusing to replace it");
        fs::remove_all(dir, ec);
        if (ec) fail(IoError::Kind::unwritable, "cannot remove " + dir.string() + ": " + ec.message());
    }
    if (dir.has_parent_path()) {
        fs::create_directories(dir.parent_path(), ec);
        if (ec) fail(IoError::Kind::unwritable, "cannot create " + dir.parent_path().string() + ": " + ec.message());
    }
    if (!fs::create_directory(dir, ec) || ec)
        fail(IoError::Kind::unwritable, "cannot create dataset directory " + dir.string());
}

std::vector<std::size_t> shape2(const RMatrix& m) {
    return {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
}

// ---- reader ---------------------------------------------------------------

struct Manifest {
    fs::path dir;
    json doc;

    const json& axis(std::size_t i) const {
        const json& axes = doc.at("axes");
        if (i >= axes.size()) fail(IoError::Kind::schema, "manifest lists too few axes");
        return axes.at(i);
    }

    std::vector<double> axis_values(std::size_t i) const {
        const json& a = axis(i);
        const auto count = a.at("count").get<std::size_t>();
        std::vector<double> out;
        if (a.contains("values")) {
            for (const auto& v : a.at("values")) out.push_back(v.get<double>());
            if (out.size() != count) fail(IoError::Kind::shape_mismatch, "axis value count differs from 'count'");
        } else {
            const double start = a.at("start").get<double>();
            const double step = a.at("step").get<double>();
            for (std::size_t k = 0; k < count; ++k) out.push_back(start + static_cast<double>(k) * step);
        }
        return out;
    }

    const json& array(const std::string& name) const {
        for (const auto& a : doc.at("arrays")) {
            if (a.at("name") == name) return a;
        }
        fail(IoError::Kind::schema, "manifest has no array '" + name + "'");
    }

    bool has_array(const std::string& name) const {
        for (const auto& a : doc.at("arrays")) {
            if (a.at("name") == name) return true;
        }
        return false;
    }

    const json& attributes() const {
        static const json empty = json::object();
        return doc.contains("attributes") && doc.at("attributes").is_object() ? doc.at("attributes") : empty;
    }

    json metadata() const {
        if (doc.contains("provenance") && doc.at("provenance").is_object() && doc.at("provenance").contains("metadata"))
            return doc.at("provenance").at("metadata");
        return json::object();
    }

    // Loads an array after checking dtype and shape against expectations.
    std::vector<unsigned char> load(const std::string& name, const char* dtype,
                                    const std::vector<std::size_t>& expected) const {
        const json& a = array(name);
        if (a.at("dtype") != dtype)
            fail(IoError::Kind::dtype_mismatch, "array '" + name + "' has dtype " + a.at("dtype").get<std::string>() +
                                                    ", expected " + dtype);
        const auto shape = a.at("shape").get<std::vector<std::size_t>>();
        if (shape != expected) fail(IoError::Kind::shape_mismatch, "array '" + name + "' shape disagrees with its axes");
        const std::size_t width = std::string(dtype) == "c128" ? 16 : 8;
        const std::size_t bytes = element_count(shape) * width;
        std::vector<unsigned char> buf = read_bytes(dir / a.at("file").get<std::string>());
        if (buf.size() != bytes) {
            std::ostringstream os;
            os << "array '" << name << "' file holds " << buf.size() << " bytes, expected " << bytes;
            fail(IoError::Kind::shape_mismatch, os.str());
        }
        return buf;
    }

    std::vector<double> real(const std::string& name, const std::vector<std::size_t>& shape) const {
        const auto buf = load(name, "f64", shape);
        std::vector<double> out(buf.size() / 8);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = get_le(buf.data() + 8 * i);
        return out;
    }

    RMatrix matrix(const std::string& name, std::size_t rows, std::size_t cols) const {
        const auto v = real(name, {rows, cols});
        RMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        if (!v.empty()) std::memcpy(m.data(), v.data(), v.size() * sizeof(double));
        return m;
    }

    std::vector<cplx> complex(const std::string& name, const std::vector<std::size_t>& shape) const {
        const auto buf = load(name, "c128", shape);
        std::vector<cplx> out(buf.size() / 16);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = cplx(get_le(buf.data() + 16 * i), get_le(buf.data() + 16 * i + 8));
        return out;
    }
};

template <typename T>
T attribute(const Manifest& m, const char* key) {
    const json& attrs = m.attributes();
    if (!attrs.contains(key)) fail(IoError::Kind::schema, std::string("manifest attribute '") + key + "' missing");
    try {
        return attrs.at(key).get<T>();
    } catch (const json::exception&) {
        fail(IoError::Kind::schema, std::string("manifest attribute '") + key + "' has the wrong type");
    }
}

DatasetKind parse_kind(const std::string& s) {
    for (DatasetKind k : {DatasetKind::time_trace, DatasetKind::spectrogram, DatasetKind::g2_map, DatasetKind::chi_map,
                          DatasetKind::floquet_spectrum, DatasetKind::series}) {
        if (to_string(k) == s) return k;
    }
    fail(IoError::Kind::schema, "unknown dataset kind '" + s + "'");
}

Manifest open_manifest(const fs::path& dir) {
    Manifest m{dir, read_manifest(dir)};
    validate_manifest(m.doc);
    return m;
}

TimeTrace load_time_trace(const Manifest& m) {
    const json& a = m.axis(0);
    if (!a.contains("start") || !a.contains("step"))
        fail(IoError::Kind::schema, "time_trace needs a uniform time axis (start, step)");
    TimeTrace t;
    t.t0 = a.at("start").get<double>();
    t.dt = a.at("step").get<double>();
    const auto n = a.at("count").get<std::size_t>();
    const auto kind = attribute<std::string>(m, "trace_kind");
    if (kind == "iq") {
        t.kind = TraceKind::iq;
        t.iq = m.complex("samples", {n});
    } else if (kind == "amplitude" || kind == "intensity") {
        t.kind = kind == "amplitude" ? TraceKind::amplitude : TraceKind::intensity;
        t.values = m.real("samples", {n});
    } else {
        fail(IoError::Kind::schema, "unknown trace_kind '" + kind + "'");
    }
    return t;
}

Spectrogram load_spectrogram(const Manifest& m) {
    Spectrogram s;
    s.row_axis = m.axis_values(0);
    s.col_axis = m.axis_values(1);
    const auto col = attribute<std::string>(m, "column_axis");
    if (col == "time") s.col_kind = ColumnAxis::time;
    else if (col == "frequency") s.col_kind = ColumnAxis::frequency;
    else fail(IoError::Kind::schema, "unknown column_axis '" + col + "'");
    const auto scale = attribute<std::string>(m, "scale");
    if (scale == "linear") s.scale = MapScale::linear;
    else if (scale == "log_magnitude") s.scale = MapScale::log_magnitude;
    else fail(IoError::Kind::schema, "unknown scale '" + scale + "'");
    const json& attrs = m.attributes();
    if (attrs.contains("pulse_off_index") && !attrs.at("pulse_off_index").is_null())
        s.pulse_off_index = attribute<std::size_t>(m, "pulse_off_index");
    s.quantity = attribute<std::string>(m, "quantity");
    s.values = m.matrix("values", s.row_axis.size(), s.col_axis.size());
    s.metadata = m.metadata();
    return s;
}

CorrelationMap load_correlation(const Manifest& m, bool with_chi) {
    CorrelationMap c;
    c.row_axis = m.axis_values(0);
    c.lag_axis = m.axis_values(1);
    const std::size_t rows = c.row_axis.size();
    c.g2 = m.matrix("g2", rows, c.lag_axis.size());
    c.correlation = m.matrix("correlation", rows, c.lag_axis.size());
    const auto mask = m.real("mask", {rows});
    c.masked.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) c.masked[i] = mask[i] != 0.0;
    if (with_chi) {
        c.omega_axis = m.axis_values(2);
        c.chi_imag = m.matrix("chi_imag", rows, c.omega_axis.size());
    }
    c.metadata = m.metadata();
    return c;
}

FloquetSweep load_floquet(const Manifest& m) {
    FloquetSweep f;
    f.drive_freq = m.axis_values(0);
    const std::size_t rows = f.drive_freq.size();
    const auto levels = m.axis(1).at("count").get<std::size_t>();
    f.quasi_energies = m.matrix("quasi_energies", rows, levels);
    f.convergence_error = m.real("convergence_error", {rows});
    f.harmonics = m.real("harmonics", {rows});
    f.metadata = m.metadata();
    return f;
}

Series load_series(const Manifest& m) {
    Series s;
    s.axis = m.axis_values(0);
    s.axis_name = m.axis(0).at("name").get<std::string>();
    s.axis_unit = m.axis(0).at("unit").get<std::string>();
    s.values = m.real("values", {s.axis.size()});
    s.name = attribute<std::string>(m, "name");
    s.metadata = m.metadata();
    return s;
}

}  // namespace

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::time_trace: return "time_trace";
        case DatasetKind::spectrogram: return "spectrogram";
        case DatasetKind::g2_map: return "g2_map";
        case DatasetKind::chi_map: return "chi_map";
        case DatasetKind::floquet_spectrum: return "floquet_spectrum";
        case DatasetKind::series: return "series";
    }
    return "unknown";
}

DatasetKind kind_of(const DatasetObject& obj) {
    struct Visitor {
        DatasetKind operator()(const TimeTrace&) const { return DatasetKind::time_trace; }
        DatasetKind operator()(const Spectrogram&) const { return DatasetKind::spectrogram; }
        DatasetKind operator()(const CorrelationMap& c) const {
            return c.chi_imag ? DatasetKind::chi_map : DatasetKind::g2_map;
        }
        DatasetKind operator()(const FloquetSweep&) const { return DatasetKind::floquet_spectrum; }
        DatasetKind operator()(const Series&) const { return DatasetKind::series; }
    };
    return std::visit(Visitor{}, obj);
}

json write_dataset(const DatasetObject& obj, const fs::path& dir, const WriteOptions& options) {
    // validate before touching the filesystem
    std::visit(
        [](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, TimeTrace> || std::is_same_v<T, Spectrogram> ||
                          std::is_same_v<T, CorrelationMap>) {
                o.validate();
            } else if constexpr (std::is_same_v<T, FloquetSweep>) {
                const auto rows = static_cast<Eigen::Index>(o.drive_freq.size());
                if (o.quasi_energies.rows() != rows || o.convergence_error.size() != o.drive_freq.size() ||
                    o.harmonics.size() != o.drive_freq.size())
                    throw ConfigError("floquet sweep arrays do not match the drive axis");
            } else {
                if (o.axis.size() != o.values.size()) throw ConfigError("series axis and values differ in length");
            }
        },
        obj);

    prepare_directory(dir, options.force);
    Writer w(dir);
    json manifest = {{"version", kDatasetVersion}, {"kind", to_string(kind_of(obj))}};
    json axes = json::array();
    json attrs = json::object();
    json metadata = json::object();

    if (const auto* t = std::get_if<TimeTrace>(&obj)) {
        axes.push_back(uniform_axis("time", "s", t->t0, t->dt, t->size()));
        attrs["trace_kind"] = to_string(t->kind);
        if (t->kind == TraceKind::iq) w.complex("samples", t->iq.data(), {t->iq.size()});
        else w.real("samples", t->values.data(), {t->values.size()});
    } else if (const auto* s = std::get_if<Spectrogram>(&obj)) {
        const bool time = s->col_kind == ColumnAxis::time;
        axes.push_back(explicit_axis("drive_frequency", "Hz", s->row_axis));
        axes.push_back(explicit_axis(time ? "time" : "frequency", time ? "s" : "Hz", s->col_axis));
        attrs["column_axis"] = time ? "time" : "frequency";
        attrs["scale"] = s->scale == MapScale::linear ? "linear" : "log_magnitude";
        attrs["pulse_off_index"] = s->pulse_off_index ? json(*s->pulse_off_index) : json(nullptr);
        attrs["quantity"] = s->quantity;
        w.real("values", s->values.data(), shape2(s->values));
        metadata = s->metadata;
    } else if (const auto* c = std::get_if<CorrelationMap>(&obj)) {
        axes.push_back(explicit_axis("drive_frequency", "Hz", c->row_axis));
        axes.push_back(explicit_axis("lag", "s", c->lag_axis));
        w.real("g2", c->g2.data(), shape2(c->g2));
        w.real("correlation", c->correlation.data(), shape2(c->correlation));
        std::vector<double> mask(c->masked.size());
        for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = c->masked[i] ? 1.0 : 0.0;
        w.real("mask", mask.data(), {mask.size()});
        if (c->chi_imag) {
            axes.push_back(explicit_axis("omega", "Hz", c->omega_axis));
            w.real("chi_imag", c->chi_imag->data(), shape2(*c->chi_imag));
        }
        metadata = c->metadata;
    } else if (const auto* f = std::get_if<FloquetSweep>(&obj)) {
        axes.push_back(explicit_axis("drive_frequency", "Hz", f->drive_freq));
        axes.push_back(uniform_axis("level", "index", 0.0, 1.0, static_cast<std::size_t>(f->quasi_energies.cols())));
        w.real("quasi_energies", f->quasi_energies.data(), shape2(f->quasi_energies));
        w.real("convergence_error", f->convergence_error.data(), {f->convergence_error.size()});
        w.real("harmonics", f->harmonics.data(), {f->harmonics.size()});
        attrs["quasi_energy_unit"] = "Hz";
        metadata = f->metadata;
    } else if (const auto* r = std::get_if<Series>(&obj)) {
        axes.push_back(explicit_axis(r->axis_name, r->axis_unit, r->axis));
        w.real("values", r->values.data(), {r->values.size()});
        attrs["name"] = r->name;
        metadata = r->metadata;
    }

    manifest["axes"] = axes;
    manifest["arrays"] = w.arrays;
    manifest["attributes"] = attrs;
    manifest["provenance"] = {{"tool", kToolVersion}, {"byte_order", "little"}, {"metadata", metadata}};
    validate_manifest(manifest);

    std::ofstream out(dir / kManifest, std::ios::trunc);
    if (!out) fail(IoError::Kind::unwritable, "cannot write manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
    if (!out) fail(IoError::Kind::unwritable, "short write of manifest in " + dir.string());
    return manifest;
}

json read_manifest(const fs::path& dir) {
    const fs::path file = dir / kManifest;
    std::ifstream in(file);
    if (!in) fail(IoError::Kind::not_found, "no manifest.json in " + dir.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(IoError::Kind::schema, "manifest in " + dir.string() + " is not valid JSON: " + e.what());
    }
}

void validate_manifest(const json& m) {
    using K = IoError::Kind;
    if (!m.is_object()) fail(K::schema, "manifest must be a JSON object");
    if (!m.contains("version") || !m.at("version").is_number_integer())
        fail(K::schema, "manifest 'version' must be an integer");
    if (m.at("version").get<long long>() != kDatasetVersion) {
        fail(K::unsupported_version,
             "unsupported dataset version " + m.at("version").dump() + " (this build reads version 1)");
    }
    if (!m.contains("kind") || !m.at("kind").is_string()) fail(K::schema, "manifest 'kind' must be a string");
    parse_kind(m.at("kind").get<std::string>());

    if (!m.contains("axes") || !m.at("axes").is_array()) fail(K::schema, "manifest 'axes' must be an array");
    for (const auto& a : m.at("axes")) {
        if (!a.is_object() || !a.contains("name") || !a.at("name").is_string() || !a.contains("unit") ||
            !a.at("unit").is_string())
            fail(K::schema, "every axis needs string 'name' and 'unit'");
        if (!a.contains("count") || !a.at("count").is_number_unsigned())
            fail(K::schema, "every axis needs a non-negative integer 'count'");
        const bool listed = a.contains("values");
        const bool uniform = a.contains("start") && a.contains("step");
        if (listed == uniform) fail(K::schema, "an axis gives either 'values' or 'start' and 'step'");
        if (listed) {
            if (!a.at("values").is_array()) fail(K::schema, "axis 'values' must be an array");
            for (const auto& v : a.at("values")) {
                if (!v.is_number()) fail(K::schema, "axis values must be numbers");
            }
        } else if (!a.at("start").is_number() || !a.at("step").is_number()) {
            fail(K::schema, "axis 'start' and 'step' must be numbers");
        }
    }

    if (!m.contains("arrays") || !m.at("arrays").is_array()) fail(K::schema, "manifest 'arrays' must be an array");
    for (const auto& a : m.at("arrays")) {
        if (!a.is_object() || !a.contains("name") || !a.at("name").is_string() || !a.contains("file") ||
            !a.at("file").is_string() || !a.contains("shape") || !a.at("shape").is_array() || !a.contains("dtype") ||
            !a.at("dtype").is_string())
            fail(K::schema, "every array needs 'name', 'file', 'shape' and 'dtype'");
        const auto file = a.at("file").get<std::string>();
        if (file.empty() || file.find('/') != std::string::npos || file.find('\\') != std::string::npos ||
            file == "." || file == "..")
            fail(K::schema, "array file '" + file + "' must be a plain name inside the dataset directory");
        for (const auto& d : a.at("shape")) {
            if (!d.is_number_unsigned()) fail(K::schema, "array shape entries must be non-negative integers");
        }
        const auto dtype = a.at("dtype").get<std::string>();
        if (dtype != "f64" && dtype != "c128") fail(K::dtype_mismatch, "unsupported dtype '" + dtype + "'");
    }
    if (m.contains("attributes") && !m.at("attributes").is_object())
        fail(K::schema, "manifest 'attributes' must be an object");
}

DatasetObject read_dataset(const fs::path& dir) {
    const Manifest m = open_manifest(dir);
    try {
        switch (parse_kind(m.doc.at("kind").get<std::string>())) {
            case DatasetKind::time_trace: return load_time_trace(m);
            case DatasetKind::spectrogram: return load_spectrogram(m);
            case DatasetKind::g2_map: return load_correlation(m, false);
            case DatasetKind::chi_map: return load_correlation(m, true);
            case DatasetKind::floquet_spectrum: return load_floquet(m);
            case DatasetKind::series: return load_series(m);
        }
    } catch (const json::exception& e) {
        fail(IoError::Kind::schema, "malformed manifest in " + dir.string() + ": " + e.what());
    }
    fail(IoError::Kind::schema, "unreachable dataset kind");
}

namespace {
template <typename T>
T read_as(const fs::path& dir, const char* expected) {
    DatasetObject obj = read_dataset(dir);
    if (auto* v = std::get_if<T>(&obj)) return std::move(*v);
    fail(IoError::Kind::schema, dir.string() + " holds a " + to_string(kind_of(obj)) + " dataset, expected " + expected);
}
}  // namespace

TimeTrace read_time_trace(const fs::path& dir) { return read_as<TimeTrace>(dir, "time_trace"); }
Spectrogram read_spectrogram(const fs::path& dir) { return read_as<Spectrogram>(dir, "spectrogram"); }
CorrelationMap read_correlation_map(const fs::path& dir) { return read_as<CorrelationMap>(dir, "g2_map or chi_map"); }
FloquetSweep read_floquet_sweep(const fs::path& dir) { return read_as<FloquetSweep>(dir, "floquet_spectrum"); }
Series read_series(const fs::path& dir) { return read_as<Series>(dir, "series"); }

}  // namespace tlsspec
