#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "tlsspec/cli.hpp"
#include "tlsspec/dataset.hpp"

using namespace tlsspec;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Small N = 1 sweep that finishes in well under a second.
std::string tiny_config(const fs::path& out) {
    return R"({
  "version": 1,
  "name": "tiny",
  "ensemble": {"defects": [{"epsilon_hz": 0, "delta_hz": 4e9, "dipole": 1}], "gamma_hz": 5e6},
  "pulse": {"carrier_hz": 4e9, "amplitude_hz": 50e6, "duration_s": 4e-9},
  "sweep": {"freq_start_hz": 3.9e9, "freq_stop_hz": 4.1e9, "freq_count": 3, "durations_s": [4e-9], "t_end_s": 10e-9},
  "output": ")" + out.string() + R"("
})";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 64") {
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"waveguide", "modes", "--bogus"}).code == kExitUsage);
    CHECK(run({"analyze", "fft"}).code == kExitUsage);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("waveguide modes prints the TE10 cutoff") {
    const Run r = run({"waveguide", "modes", "--a-mm", "58.17", "--b-mm", "29.08"});
    CHECK(r.code == 0);
    CHECK(r.out.find("TE10") != std::string::npos);
    const auto at = r.out.find("TE10");
    REQUIRE(at != std::string::npos);
    CHECK(std::abs(std::stod(r.out.substr(at + 4)) - 2.577) < 1e-3);

    const Run b = run({"waveguide", "beta", "--a-mm", "58.17", "--b-mm", "29.08", "--freq-ghz", "2"});
    CHECK(b.code == 0);
    CHECK(b.out.find("\"evanescent\": true") != std::string::npos);
    CHECK(run({"waveguide", "modes", "--a-mm", "10", "--b-mm", "20"}).code == 2);
}

TEST_CASE("waveguide flatten writes a gain table") {
    testing::ScratchDir dir("cli");
    write_text(dir / "profile.csv", "freq_hz,mean_field\n3e9,1\n4e9,2\n");
    const Run r = run({"waveguide", "flatten", "--profile", (dir / "profile.csv").string(), "--target", "1",
                       "--output", (dir / "gain.csv").string()});
    CHECK(r.code == 0);
    const std::string text = slurp(dir / "gain.csv");
    CHECK(text.find("freq_hz,scale") == 0);
    CHECK(text.find("0.5") != std::string::npos);
}

TEST_CASE("analyze fft finds an injected tone") {
    testing::ScratchDir dir("cli");
    Spectrogram m;
    m.row_axis = {4e9};
    const double dt = 0.1e-9;
    m.values = RMatrix(1, 3000);
    for (int k = 0; k < 3000; ++k) {
        m.col_axis.push_back(k * dt);
        const double t = k * dt;
        m.values(0, k) = k < 500 ? 0.0 : std::exp(-(t - 50e-9) / 150e-9) * std::cos(kTwoPi * 80e6 * t);
    }
    m.pulse_off_index = 500;
    write_dataset(m, dir / "in");
    const Run r = run({"analyze", "fft", "--window", "post-pulse", (dir / "in").string(), (dir / "out").string()});
    REQUIRE(r.code == 0);
    const Spectrogram s = read_spectrogram(dir / "out");
    const auto values = row_values(s, 0);
    const auto peak = peak_in_range(s.col_axis, values, 1e6, 2e9);
    REQUIRE(peak);
    CHECK(std::abs(s.col_axis[*peak] - 80e6) <= s.col_axis[1]);

    // refusing to overwrite is an io error
    CHECK(run({"analyze", "fft", (dir / "in").string(), (dir / "out").string()}).code == 3);
    CHECK(run({"analyze", "fft", "--force", (dir / "in").string(), (dir / "out").string()}).code == 0);
    CHECK(run({"analyze", "fft", "--window", "sideways", (dir / "in").string(), (dir / "o2").string()}).code == 2);
    CHECK(run({"analyze", "fft", (dir / "missing").string(), (dir / "o3").string()}).code == 3);
}

TEST_CASE("analyze pipeline on an imported IQ record") {
    testing::ScratchDir dir("cli");
    std::ostringstream csv;
    csv << "t,i,q\n";
    csv.precision(17);
    for (int k = 0; k < 400; ++k) {
        const double t = k * 1e-9;
        csv << t << ',' << std::exp(-t / 100e-9) << ',' << 0.0 << '\n';
    }
    write_text(dir / "rec.csv", csv.str());
    REQUIRE(run({"analyze", "import-iq", (dir / "rec.csv").string(), (dir / "rec").string()}).code == 0);
    REQUIRE(run({"analyze", "homodyne", (dir / "rec").string(), (dir / "amp").string()}).code == 0);
    const Run fit = run({"analyze", "lifetime", (dir / "amp").string(), "--start-ns", "10", "--stop-ns", "300"});
    REQUIRE(fit.code == 0);
    const auto j = nlohmann::json::parse(fit.out);
    CHECK(j["tau_s"].get<double>() == doctest::Approx(100e-9).epsilon(1e-6));
}

TEST_CASE("simulate: dry run, datasets and exit codes") {
    testing::ScratchDir dir("cli");
    write_text(dir / "tiny.json", tiny_config(dir / "out"));

    const Run dry = run({"simulate", "--config", (dir / "tiny.json").string(), "--dry-run"});
    CHECK(dry.code == 0);
    const auto plan = nlohmann::json::parse(dry.out);
    CHECK(plan["frequency_points"] == 3);
    CHECK(plan["runs"].size() == 1);
    CHECK(!fs::exists(dir / "out"));

    const Run sim = run({"simulate", "--config", (dir / "tiny.json").string()});
    REQUIRE(sim.code == 0);
    const Spectrogram pop = read_spectrogram(dir / "out" / "tau_4ns" / "population");
    CHECK(pop.rows() == 3);
    CHECK(pop.col_axis[*pop.pulse_off_index] == doctest::Approx(4e-9));
    CHECK(pop.metadata.contains("plan"));
    CHECK(fs::exists(dir / "out" / "timing.json"));
    CHECK(run({"simulate", "--config", (dir / "tiny.json").string()}).code == 3);

    write_text(dir / "broken.json", "{\"version\": 1, \"nme\": 3}");
    CHECK(run({"simulate", "--config", (dir / "broken.json").string()}).code == 2);
    CHECK(run({"simulate", "--config", (dir / "absent.json").string()}).code == 3);
    write_text(dir / "garbage.json", "{not json");
    CHECK(run({"simulate", "--config", (dir / "garbage.json").string()}).code == 2);
}

TEST_CASE("simulate output does not depend on the worker count") {
    testing::ScratchDir dir("cli");
    write_text(dir / "tiny.json", tiny_config(dir / "unused"));
    REQUIRE(run({"simulate", "--config", (dir / "tiny.json").string(), "--output", (dir / "w1").string(), "--workers", "1"}).code == 0);
    REQUIRE(run({"simulate", "--config", (dir / "tiny.json").string(), "--output", (dir / "w3").string(), "--workers", "3"}).code == 0);
    for (const char* q : {"population", "dipole"}) {
        const fs::path a = dir / "w1" / "tau_4ns" / q;
        const fs::path b = dir / "w3" / "tau_4ns" / q;
        for (const auto& entry : fs::directory_iterator(a))
            CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
    }
}

TEST_CASE("render and floquet subcommands") {
    testing::ScratchDir dir("cli");
    write_text(dir / "tiny.json", tiny_config(dir / "out"));
    REQUIRE(run({"simulate", "--config", (dir / "tiny.json").string()}).code == 0);
    CHECK(run({"render", (dir / "out" / "tau_4ns" / "population").string(), (dir / "pop.png").string(), "--clip", "99"}).code == 0);
    CHECK(fs::file_size(dir / "pop.png") > 0);
    CHECK(run({"floquet", "--config", (dir / "tiny.json").string()}).code == 0);
    const FloquetSweep f = read_floquet_sweep(dir / "out" / "floquet");
    CHECK(f.quasi_energies.rows() == 3);
}

TEST_CASE("selftest passes") {
    std::ostringstream out;
    CHECK(run_selftest(out) == 0);
}

}  // TEST_SUITE
