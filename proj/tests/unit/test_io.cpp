#include <doctest.h>

#include <bit>
#include <cmath>
#include <functional>
#include <fstream>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "tlsspec/config.hpp"
#include "tlsspec/csv.hpp"
#include "tlsspec/dataset.hpp"
#include "tlsspec/render.hpp"

using namespace tlsspec;
namespace fs = std::filesystem;

namespace {

Spectrogram sample_spectrogram() {
    Spectrogram s;
    s.row_axis = {3e9, 3.5e9, 4e9};
    s.col_axis = {0.0, 0.1e-9, 0.2e-9, 0.30000000000000004e-9};
    s.values = RMatrix(3, 4);
    std::mt19937 rng(1);
    std::normal_distribution<double> n;
    for (Eigen::Index i = 0; i < s.values.size(); ++i) s.values.data()[i] = n(rng) * 1e-7;
    s.pulse_off_index = 2;
    s.quantity = "population";
    s.metadata = {{"seed", 17}, {"note", "x"}};
    return s;
}

IoError::Kind io_kind(const std::function<void()>& f) {
    try {
        f();
    } catch (const IoError& e) {
        return e.kind();
    }
    FAIL("expected an IoError");
    return IoError::Kind::format;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

nlohmann::json load_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

void save_json(const fs::path& p, const nlohmann::json& j) {
    std::ofstream out(p);
    out << j.dump(2);
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("spectrogram round trip is bit exact") {
    testing::ScratchDir dir("io");
    const Spectrogram s = sample_spectrogram();
    const auto manifest = write_dataset(s, dir / "ds");
    CHECK(manifest["kind"] == "spectrogram");
    CHECK(manifest["version"] == 1);
    CHECK(fs::exists(dir / "ds" / "manifest.json"));
    const Spectrogram r = read_spectrogram(dir / "ds");
    CHECK(r.values == s.values);
    CHECK(r.row_axis == s.row_axis);
    CHECK(r.col_axis == s.col_axis);
    CHECK(r.pulse_off_index == s.pulse_off_index);
    CHECK(r.quantity == s.quantity);
    CHECK(r.metadata == s.metadata);
    CHECK(std::holds_alternative<Spectrogram>(read_dataset(dir / "ds")));
    CHECK_NOTHROW(validate_manifest(read_manifest(dir / "ds")));
}

TEST_CASE("raw array layout is little-endian row-major float64") {
    testing::ScratchDir dir("io");
    const Spectrogram s = sample_spectrogram();
    const auto manifest = write_dataset(s, dir / "ds");
    const auto& array = manifest["arrays"][0];
    CHECK(array["dtype"] == "f64");
    CHECK(array["shape"] == nlohmann::json::array({3, 4}));
    const std::string bytes = slurp(dir / "ds" / array["file"].get<std::string>());
    REQUIRE(bytes.size() == 12 * 8);
    // element (1, 2) sits at row-major offset 6
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[6 * 8 + i])) << (8 * i);
    CHECK(std::bit_cast<double>(bits) == s.values(1, 2));
}

TEST_CASE("every dataset kind round trips") {
    testing::ScratchDir dir("io");

    TimeTrace iq{2e-9, 0.5e-9, TraceKind::iq, {cplx(1.5, -2.25), cplx(1e-300, 3e300), cplx(0, -0.0)}, {}};
    write_dataset(iq, dir / "iq");
    const TimeTrace iq2 = read_time_trace(dir / "iq");
    CHECK(iq2.kind == TraceKind::iq);
    CHECK(iq2.t0 == iq.t0);
    CHECK(iq2.dt == iq.dt);
    REQUIRE(iq2.iq.size() == 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(iq2.iq[k].real() == iq.iq[k].real());
        CHECK(iq2.iq[k].imag() == iq.iq[k].imag());
    }

    TimeTrace amp{0.0, 1e-9, TraceKind::intensity, {}, {1.0, 2.0, 0.25}};
    write_dataset(amp, dir / "amp");
    const TimeTrace amp2 = read_time_trace(dir / "amp");
    CHECK(amp2.kind == TraceKind::intensity);
    CHECK(amp2.values == amp.values);

    CorrelationMap c;
    c.row_axis = {3e9, 4e9};
    c.lag_axis = {0.0, 1e-9, 2e-9};
    c.g2 = RMatrix::Random(2, 3);
    c.correlation = RMatrix::Random(2, 3);
    c.masked = {false, true};
    c.metadata = {{"g2", {{"max_lag_s", 2e-9}}}};
    write_dataset(c, dir / "g2");
    CHECK(read_manifest(dir / "g2")["kind"] == "g2_map");
    const CorrelationMap c2 = read_correlation_map(dir / "g2");
    CHECK(c2.g2 == c.g2);
    CHECK(c2.correlation == c.correlation);
    CHECK(c2.masked == c.masked);
    CHECK(!c2.chi_imag);
    c.omega_axis = {0.0, 1e8, 2e8, 3e8};
    c.chi_imag = RMatrix::Random(2, 4);
    write_dataset(c, dir / "chi");
    CHECK(read_manifest(dir / "chi")["kind"] == "chi_map");
    const CorrelationMap c3 = read_correlation_map(dir / "chi");
    REQUIRE(c3.chi_imag);
    CHECK(*c3.chi_imag == *c.chi_imag);
    CHECK(c3.omega_axis == c.omega_axis);

    FloquetSweep f;
    f.drive_freq = {3e9, 4e9};
    f.quasi_energies = RMatrix::Random(2, 4);
    f.convergence_error = {1.0, 2.0};
    f.harmonics = {12, 24};
    f.metadata = {{"m_max", 12}};
    write_dataset(f, dir / "fl");
    const FloquetSweep f2 = read_floquet_sweep(dir / "fl");
    CHECK(f2.quasi_energies == f.quasi_energies);
    CHECK(f2.convergence_error == f.convergence_error);
    CHECK(f2.harmonics == f.harmonics);
    CHECK(f2.drive_freq == f.drive_freq);
    CHECK(f2.metadata == f.metadata);

    Series s;
    s.axis = {3e9, 4e9, 5e9};
    s.values = {0.1, -0.2, 0.3};
    s.name = "mean_driven(population)";
    write_dataset(s, dir / "series");
    const Series s2 = read_series(dir / "series");
    CHECK(s2.values == s.values);
    CHECK(s2.axis == s.axis);
    CHECK(s2.name == s.name);
    CHECK(s2.axis_unit == "Hz");

    CHECK(io_kind([&] { read_series(dir / "fl"); }) == IoError::Kind::schema);
}

TEST_CASE("damaged datasets are reported distinctly") {
    testing::ScratchDir dir("io");
    const Spectrogram s = sample_spectrogram();
    const auto manifest = write_dataset(s, dir / "ds");
    const fs::path file = dir / "ds" / manifest["arrays"][0]["file"].get<std::string>();

    SUBCASE("truncated binary") {
        fs::resize_file(file, 8 * 11);
        CHECK(io_kind([&] { read_dataset(dir / "ds"); }) == IoError::Kind::shape_mismatch);
    }
    SUBCASE("missing binary") {
        fs::remove(file);
        CHECK(io_kind([&] { read_dataset(dir / "ds"); }) == IoError::Kind::not_found);
    }
    SUBCASE("future version") {
        auto m = load_json(dir / "ds" / "manifest.json");
        m["version"] = 2;
        save_json(dir / "ds" / "manifest.json", m);
        CHECK(io_kind([&] { read_dataset(dir / "ds"); }) == IoError::Kind::unsupported_version);
    }
    SUBCASE("dtype mismatch") {
        auto m = load_json(dir / "ds" / "manifest.json");
        m["arrays"][0]["dtype"] = "c128";
        save_json(dir / "ds" / "manifest.json", m);
        CHECK(io_kind([&] { read_dataset(dir / "ds"); }) == IoError::Kind::dtype_mismatch);
        m["arrays"][0]["dtype"] = "f32";
        save_json(dir / "ds" / "manifest.json", m);
        CHECK(io_kind([&] { read_dataset(dir / "ds"); }) == IoError::Kind::dtype_mismatch);
    }
    SUBCASE("shape disagrees with axes") {
        auto m = load_json(dir / "ds" / "manifest.json");
        m["arrays"][0]["shape"] = {4, 3};
        save_json(dir / "ds" / "manifest.json", m);
        CHECK(io_kind([&] { read_dataset(dir / "ds"); }) == IoError::Kind::shape_mismatch);
    }
    SUBCASE("schema violation") {
        auto m = load_json(dir / "ds" / "manifest.json");
        m.erase("axes");
        save_json(dir / "ds" / "manifest.json", m);
        CHECK(io_kind([&] { read_dataset(dir / "ds"); }) == IoError::Kind::schema);
    }
    SUBCASE("unknown fields are ignored") {
        auto m = load_json(dir / "ds" / "manifest.json");
        m["future_field"] = {{"anything", 1}};
        m["axes"][0]["extra"] = true;
        save_json(dir / "ds" / "manifest.json", m);
        CHECK(read_spectrogram(dir / "ds").values == s.values);
    }
    SUBCASE("no manifest") {
        CHECK(io_kind([&] { read_dataset(dir / "nothing"); }) == IoError::Kind::not_found);
    }
}

TEST_CASE("writes use create-new semantics") {
    testing::ScratchDir dir("io");
    const Spectrogram s = sample_spectrogram();
    write_dataset(s, dir / "ds");
    CHECK(io_kind([&] { write_dataset(s, dir / "ds"); }) == IoError::Kind::exists);
    Spectrogram t = s;
    t.values *= 2.0;
    write_dataset(t, dir / "ds", {true});
    CHECK(read_spectrogram(dir / "ds").values == t.values);

    fs::create_directories(dir / "precious");
    write_text(dir / "precious" / "keep.txt", "data");
    CHECK(io_kind([&] { write_dataset(s, dir / "precious", {true}); }) == IoError::Kind::exists);
    CHECK(fs::exists(dir / "precious" / "keep.txt"));
}

TEST_CASE("IQ CSV import") {
    testing::ScratchDir dir("io");
    write_text(dir / "t.csv", "t,i,q\n0.0,1,2\n2e-9,3,4\n4e-9,5,6\n");
    const TimeTrace t = import_iq_csv(dir / "t.csv");
    CHECK(t.dt == doctest::Approx(2e-9));
    CHECK(t.t0 == 0.0);
    REQUIRE(t.iq.size() == 3);
    CHECK(t.iq[2] == cplx(5, 6));

    write_text(dir / "iq.csv", "i, q\n1,2\n3,4\n");
    const TimeTrace u = import_iq_csv(dir / "iq.csv", 1e-9, 5e-9);
    CHECK(u.t0 == 5e-9);
    CHECK(u.dt == 1e-9);
    CHECK_THROWS_AS(import_iq_csv(dir / "iq.csv"), ConfigError);

    write_text(dir / "noq.csv", "t,i\n0,1\n1,2\n");
    CHECK(io_kind([&] { import_iq_csv(dir / "noq.csv"); }) == IoError::Kind::format);
    write_text(dir / "nohead.csv", "0,1,2\n1,2,3\n");
    CHECK(io_kind([&] { import_iq_csv(dir / "nohead.csv"); }) == IoError::Kind::format);
    write_text(dir / "jitter.csv", "t,i,q\n0,1,2\n1e-9,1,2\n2.1e-9,1,2\n");
    CHECK(io_kind([&] { import_iq_csv(dir / "jitter.csv"); }) == IoError::Kind::format);
    write_text(dir / "bad.csv", "t,i,q\n0,1,2\n1e-9,x,2\n");
    CHECK(io_kind([&] { import_iq_csv(dir / "bad.csv"); }) == IoError::Kind::format);
    write_text(dir / "short.csv", "t,i,q\n0,1,2\n1e-9,2\n");
    CHECK(io_kind([&] { import_iq_csv(dir / "short.csv"); }) == IoError::Kind::format);
    CHECK(io_kind([&] { import_iq_csv(dir / "absent.csv"); }) == IoError::Kind::not_found);
}

TEST_CASE("large IQ CSV round trips against its generator") {
    testing::ScratchDir dir("io");
    const double dt = 0.1e-9;
    TimeTrace gen{1e-6, dt, TraceKind::iq, {}, {}};
    for (int k = 0; k < 100000; ++k) {
        const double t = k * dt;
        gen.iq.emplace_back(std::exp(-t / 2e-6) * std::cos(kTwoPi * 37e6 * t), std::sin(kTwoPi * 11e6 * t) / 3.0);
    }
    write_iq_csv(gen, dir / "big.csv");
    const TimeTrace back = import_iq_csv(dir / "big.csv");
    REQUIRE(back.iq.size() == gen.iq.size());
    CHECK(std::abs(back.dt - dt) < 1e-12 * dt);
    CHECK(std::abs(back.t0 - gen.t0) < 1e-12 * gen.t0);
    double worst = 0.0;
    for (std::size_t k = 0; k < gen.iq.size(); ++k) worst = std::max(worst, std::abs(back.iq[k] - gen.iq[k]));
    CHECK(worst <= 1e-12);
}

TEST_CASE("field profiles and gain tables") {
    testing::ScratchDir dir("io");
    write_text(dir / "profile.csv", "freq_hz,mean_field\n3e9,1\n4e9,2\n5e9,4\n");
    const FieldProfile p = read_field_profile(dir / "profile.csv", 1.0);
    CHECK(p.mean_field == std::vector<double>{1.0, 2.0, 4.0});
    write_gain_table(flatten_gain(p), dir / "gain.csv");
    CHECK(slurp(dir / "gain.csv").rfind("freq_hz,scale\n", 0) == 0);
    write_text(dir / "bad_profile.csv", "freq_hz,mean_field\n3e9,1\n4e9,-2\n");
    CHECK_THROWS(read_field_profile(dir / "bad_profile.csv", 1.0));
}

TEST_CASE("percentile clipping of the colour range") {
    CHECK(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 50.0) == 3.0);
    CHECK(percentile({1.0, 2.0}, 25.0) == doctest::Approx(1.25));
    RMatrix v(1, 101);
    for (int k = 0; k <= 100; ++k) v(0, k) = k;
    RenderOptions o;
    o.clip_percentile = 99.0;
    const auto r = color_range(v, o);
    CHECK(r[0] == doctest::Approx(1.0));
    CHECK(r[1] == doctest::Approx(99.0));
    o.clip_percentile.reset();
    CHECK(color_range(v, o) == std::array<double, 2>{0.0, 100.0});
}

TEST_CASE("rendering is deterministic and leaves data untouched") {
    testing::ScratchDir dir("io");
    Spectrogram tiny;
    tiny.row_axis = {3e9, 4e9};
    tiny.col_axis = {0.0, 1e-9};
    tiny.values = RMatrix(2, 2);
    tiny.values << 0.0, 1.0, 2.0, 3.0;
    tiny.pulse_off_index = 1;
    const RMatrix before = tiny.values;
    RenderOptions o;
    o.vertical_markers = {3.5e9};
    o.bandwidth = 40e6;
    render_heatmap(tiny, dir / "a.png", o);
    render_heatmap(tiny, dir / "b.png", o);
    render_heatmap(tiny, dir / "a.svg", o);
    CHECK(fs::file_size(dir / "a.png") > 0);
    CHECK(slurp(dir / "a.png") == slurp(dir / "b.png"));
    CHECK(slurp(dir / "a.png").substr(1, 3) == "PNG");
    CHECK(slurp(dir / "a.svg").find("<svg") != std::string::npos);
    CHECK(tiny.values == before);

    Series s;
    s.axis = {3e9, 4e9, 5e9};
    s.values = {1.0, -1.0, 0.5};
    render_linecut(s, dir / "cut.png");
    CHECK(fs::file_size(dir / "cut.png") > 0);

    Spectrogram empty;
    CHECK_THROWS(render_heatmap(empty, dir / "e.png"));
    CHECK_THROWS(render_heatmap(tiny, dir / "a.bmp"));
}

TEST_CASE("run configuration parsing") {
    const nlohmann::json doc = nlohmann::json::parse(R"({
        "version": 1,
        "name": "pair",
        "ensemble": {"defects": [{"epsilon_hz": 0, "delta_hz": 3.5e9, "dipole": 1},
                                 {"epsilon_hz": 0, "delta_hz": 4.5e9, "dipole": 1}],
                     "coupling_hz": 50e6, "gamma_hz": 2e6},
        "pulse": {"carrier_hz": 4e9, "amplitude_hz": 100e6, "duration_s": 100e-9},
        "sweep": {"freq_start_hz": 3e9, "freq_stop_hz": 5e9, "freq_count": 81, "durations_s": [100e-9]},
        "output": "out"
    })");
    const RunConfig c = run_config_from_json(doc, "/base");
    CHECK(c.name == "pair");
    CHECK(c.plan.spec.size() == 2);
    CHECK(c.plan.spec.coupling(0, 1) == 50e6);
    CHECK(c.plan.freq_axis.count == 81);
    CHECK(c.output == fs::path("/base/out"));
    // serialized configs parse back to the same document
    CHECK(run_config_from_json(c.to_json(), "/base").to_json() == c.to_json());

    nlohmann::json typo = doc;
    typo["pulse"]["amplitude"] = 1.0;
    CHECK_THROWS_AS(run_config_from_json(typo), ConfigError);
    nlohmann::json v2 = doc;
    v2["version"] = 2;
    CHECK_THROWS_AS(run_config_from_json(v2), ConfigError);
    nlohmann::json bad = doc;
    bad["ensemble"]["gamma_hz"] = -1.0;
    CHECK_THROWS_AS(run_config_from_json(bad), ConfigError);
    CHECK(io_kind([&] { load_run_config("/nonexistent/config.json"); }) == IoError::Kind::not_found);
}

TEST_CASE("bundled configurations load") {
    const fs::path root = fs::path(TLSSPEC_SOURCE_DIR) / "configs";
    for (const char* name : {"fig8.json", "fig9.json", "fig4-analog.json"}) {
        INFO(name);
        CHECK_NOTHROW(load_run_config(root / name));
    }
}

}  // TEST_SUITE
