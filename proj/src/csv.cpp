#include "tlsspec/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace tlsspec {

namespace {

[[noreturn]] void format_error(const std::filesystem::path& path, std::size_t line, const std::string& what) {
    std::ostringstream os;
    os << path.string() << ":" << line << ": " << what;
    throw IoError(IoError::Kind::format, os.str());
}

std::string trim(std::string s) {
    auto space = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), space));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), space).base(), s.end());
    return s;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

// Parsed table: lower-cased header names to column data.
struct Table {
    std::map<std::string, std::size_t> columns;
    std::vector<std::vector<double>> data;  // per column
    std::size_t rows{0};
};

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(IoError::Kind::not_found, "cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    Table t;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto fields = split(line);
        if (t.columns.empty()) {
            for (std::size_t c = 0; c < fields.size(); ++c) {
                std::string name = fields[c];
                std::transform(name.begin(), name.end(), name.begin(),
                               [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
                if (name.empty()) format_error(path, lineno, "empty column name in header");
                if (!t.columns.emplace(name, c).second) format_error(path, lineno, "duplicate column '" + name + "'");
                double probe = 0.0;
                const auto res = std::from_chars(name.data(), name.data() + name.size(), probe);
                if (res.ec == std::errc() && res.ptr == name.data() + name.size())
                    format_error(path, lineno, "header row required (found numeric field '" + name + "')");
            }
            t.data.resize(fields.size());
            continue;
        }
        if (fields.size() != t.data.size()) {
            std::ostringstream os;
            os << "expected " << t.data.size() << " fields, found " << fields.size();
            format_error(path, lineno, os.str());
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string& f = fields[c];
            double v = 0.0;
            const char* begin = f.data();
            if (!f.empty() && f.front() == '+') ++begin;
            const auto res = std::from_chars(begin, f.data() + f.size(), v);
            if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v))
                format_error(path, lineno, "malformed number '" + f + "'");
            t.data[c].push_back(v);
        }
        ++t.rows;
    }
    if (t.columns.empty()) throw IoError(IoError::Kind::format, path.string() + ": empty file (header required)");
    return t;
}

const std::vector<double>& column(const Table& t, const std::filesystem::path& path, const std::string& name) {
    const auto it = t.columns.find(name);
    if (it == t.columns.end()) format_error(path, 1, "missing column '" + name + "'");
    return t.data[it->second];
}

std::string exact(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

TimeTrace import_iq_csv(const std::filesystem::path& path, std::optional<double> dt, double t0) {
    const Table t = read_table(path);
    const auto& i = column(t, path, "i");
    const auto& q = column(t, path, "q");
    for (const auto& [name, index] : t.columns) {
        if (name != "t" && name != "i" && name != "q") format_error(path, 1, "unexpected column '" + name + "'");
        (void)index;
    }
    if (t.rows == 0) throw IoError(IoError::Kind::format, path.string() + ": no data rows");

    TimeTrace trace;
    trace.kind = TraceKind::iq;
    trace.iq.resize(t.rows);
    for (std::size_t k = 0; k < t.rows; ++k) trace.iq[k] = cplx(i[k], q[k]);

    if (t.columns.count("t") != 0) {
        const auto& ts = column(t, path, "t");
        trace.t0 = ts.front();
        if (t.rows == 1) {
            if (!dt) throw ConfigError(path.string() + ": a single timestamped row needs an explicit dt");
            trace.dt = *dt;
        } else {
            trace.dt = (ts.back() - ts.front()) / static_cast<double>(t.rows - 1);
            if (!(trace.dt > 0.0)) format_error(path, 2, "timestamps must increase");
            for (std::size_t k = 1; k < t.rows; ++k) {
                const double step = ts[k] - ts[k - 1];
                if (std::abs(step - trace.dt) > 1e-6 * trace.dt) {
                    std::ostringstream os;
                    os << "non-uniform timestamps: step " << step << " s differs from mean step " << trace.dt << " s";
                    format_error(path, k + 2, os.str());
                }
            }
        }
    } else {
        if (!dt) throw ConfigError(path.string() + ": no t column, so dt is required");
        trace.dt = *dt;
        trace.t0 = t0;
    }
    trace.validate();
    return trace;
}

void write_iq_csv(const TimeTrace& trace, const std::filesystem::path& path, bool with_time) {
    if (trace.kind != TraceKind::iq) throw ConfigError("write_iq_csv expects an IQ trace");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(IoError::Kind::unwritable, "cannot write " + path.string());
    out << (with_time ? "t,i,q\n" : "i,q\n");
    for (std::size_t k = 0; k < trace.iq.size(); ++k) {
        if (with_time) out << exact(trace.time(k)) << ',';
        out << exact(trace.iq[k].real()) << ',' << exact(trace.iq[k].imag()) << '\n';
    }
    if (!out) throw IoError(IoError::Kind::unwritable, "short write to " + path.string());
}

FieldProfile read_field_profile(const std::filesystem::path& path, double target) {
    const Table t = read_table(path);
    FieldProfile p;
    p.freq = column(t, path, "freq_hz");
    p.mean_field = column(t, path, "mean_field");
    p.target = target;
    p.validate();
    return p;
}

void write_gain_table(const GainTable& gain, const std::filesystem::path& path) {
    gain.validate();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(IoError::Kind::unwritable, "cannot write " + path.string());
    out << "freq_hz,scale\n";
    for (std::size_t k = 0; k < gain.freq.size(); ++k) out << exact(gain.freq[k]) << ',' << exact(gain.scale[k]) << '\n';
    if (!out) throw IoError(IoError::Kind::unwritable, "short write to " + path.string());
}

}  // namespace tlsspec
