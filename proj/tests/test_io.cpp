#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "capspin/constants.hpp"
#include "capspin/series_io.hpp"
#include "capspin/structure_io.hpp"

using namespace capspin;

namespace {

std::string fixture(const char* name) {
    return std::string(CAPSPIN_DATA_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const char* kMatrixForm = R"({
  "label": "pairtest",
  "n_spins": 3,
  "j_couplings_hz": [
    [0.0, 0.25, -0.1],
    [0.25, 0.0, 0.4],
    [-0.1, 0.4, 0.0]
  ]
})";

const char* kPairForm = R"({
  "label": "pairtest",
  "n_spins": 3,
  "j_couplings_hz": [
    {"i": 1, "j": 0, "value": 0.25},
    {"i": 0, "j": 2, "value": -0.1},
    {"i": 2, "j": 1, "value": 0.4}
  ]
})";

}  // namespace

TEST_CASE("structure fixtures parse with the documented unit conversions") {
    const SpinSystem sys = parse_structure(fixture("dimer_s4.json"));
    CHECK(sys.n_spins == 4);
    CHECK(sys.label == "dimer_s4");
    CHECK(sys.symmetry_label == "S4");
    CHECK(sys.j_hz(0, 1) == -0.193);
    CHECK(sys.j_hz(1, 0) == -0.193);
    CHECK(sys.j_hz(2, 3) == -0.189);
    CHECK(sys.j_hz(0, 0) == 0.0);
    REQUIRE(sys.positions.size() == 4);
    CHECK(sys.positions[0].x() == doctest::Approx(1.34e-10).epsilon(1e-14));
    CHECK(sys.positions[0].y() == doctest::Approx(-1.75e-10).epsilon(1e-14));
    CHECK(sys.positions[0].z() == doctest::Approx(2.03e-10).epsilon(1e-14));
    CHECK(sys.tau_c_s == doctest::Approx(177e-12).epsilon(1e-14));
    CHECK(sys.b_field_t == doctest::Approx(50e-6).epsilon(1e-14));
    CHECK_NOTHROW(sys.validate());
}

TEST_CASE("every bundled fixture validates") {
    for (const char* name :
         {"dimer_c2_a.json", "dimer_s4.json", "dimer_c2_b.json", "dimer_cs.json",
          "dimer_c2v.json", "dimer_td.json", "dimer_s4_shielded.json", "monomer.json",
          "posner_synthetic_a.json", "posner_synthetic_b.json"}) {
        const SpinSystem sys = parse_structure(fixture(name));
        CHECK_NOTHROW(sys.validate());
        CHECK(!sys.label.empty());
    }
}

TEST_CASE("matrix and pair-list coupling forms are interchangeable") {
    const SpinSystem a = parse_structure_text(kMatrixForm);
    const SpinSystem b = parse_structure_text(kPairForm);
    CHECK((a.j_hz - b.j_hz).cwiseAbs().maxCoeff() == 0.0);
    CHECK(structure_hash(a) == structure_hash(b));
    CHECK(structure_hash(a).rfind("fnv1a:", 0) == 0);
    CHECK(structure_hash(a).size() == 6 + 16);
}

TEST_CASE("structure hashes react to any physical change") {
    SpinSystem a = parse_structure_text(kMatrixForm);
    SpinSystem b = a;
    CHECK(structure_hash(a) == structure_hash(b));
    b.j_hz(0, 1) += 1e-12;
    CHECK(structure_hash(a) != structure_hash(b));
    b = a;
    b.tau_c_s *= 1.0 + 1e-12;
    CHECK(structure_hash(a) != structure_hash(b));
}

TEST_CASE("structure errors pinpoint the offending field") {
    auto expect_error = [](const std::string& text, const char* needle) {
        try {
            parse_structure_text(text, true, nullptr, "probe.json");
            FAIL_CHECK("expected a parse failure containing '" << needle << "'");
        } catch (const std::exception& e) {
            const std::string msg = e.what();
            CHECK(msg.find("probe.json") != std::string::npos);
            CHECK_MESSAGE(msg.find(needle) != std::string::npos, "message was: ", msg);
        }
    };

    expect_error(R"({"label":"x","n_spins":0,"j_couplings_hz":[]})", "n_spins");
    expect_error(R"({"label":"x","n_spins":2,"j_couplings_hz":[[0.0,1.0],[0.5,0.0]]})",
                 "symmetric");
    expect_error(R"({"label":"x","n_spins":2,"j_couplings_hz":[[0.2,1.0],[1.0,0.0]]})",
                 "diagonal");
    expect_error(
        R"({"label":"x","n_spins":2,"j_couplings_hz":[{"i":0,"j":1,"value":1.0},{"i":1,"j":0,"value":1.0}]})",
        "duplicate");
    expect_error(R"({"label":"x","n_spins":2,"j_couplings_hz":[{"i":0,"j":0,"value":1.0}]})",
                 "self-coupling");
    expect_error(R"({"label":"x","n_spins":2,"j_couplings_hz":[{"i":0,"j":5,"value":1.0}]})",
                 "outside");
    expect_error(R"({"label":"x","n_spins":2,"j_couplings_hz":[],"positions_angstrom":[[0,0,0]]})",
                 "positions_angstrom");
    expect_error(
        R"({"label":"x","n_spins":2,"j_couplings_hz":[],"shielding_tensors":[[[1,0],[0,1]],[[1,0],[0,1]]]})",
        "shielding");
    expect_error(R"({"label":"x","n_spins":2,"j_couplings_hz":[],"schema_version":2})",
                 "schema_version");
    expect_error(R"({"label":"x","n_spins":2,"j_couplings_hz":[],"surprise":1})", "surprise");
}

TEST_CASE("lax parsing downgrades unknown keys to warnings") {
    std::vector<std::string> warnings;
    const SpinSystem sys = parse_structure_text(
        R"({"label":"x","n_spins":2,"j_couplings_hz":[],"surprise":1})", false, &warnings);
    CHECK(sys.n_spins == 2);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("surprise") != std::string::npos);
}

TEST_CASE("series round-trip is byte-identical") {
    ResultSeries series;
    series.metadata = {{"tool", "capspin"}, {"label", "roundtrip"}, {"note", "a: b: c"}};
    series.time_s = {0.0, 1.0 / 3.0, 2e-17, 1e3};
    series.p_singlet = {1.0, 0.123456789012345678, 0.25, 0.5};
    series.concurrence = {1.0, 0.0, 0.5, 0.9999999999999999};

    const std::string path_a = "series_roundtrip_a.csv";
    const std::string path_b = "series_roundtrip_b.csv";
    write_series(series, path_a);
    const ResultSeries back = parse_series(path_a);
    CHECK(back.metadata == series.metadata);
    CHECK(back.time_s == series.time_s);
    CHECK(back.p_singlet == series.p_singlet);
    CHECK(back.concurrence == series.concurrence);
    write_series(back, path_b);
    CHECK(slurp(path_a) == slurp(path_b));
    std::remove(path_a.c_str());
    std::remove(path_b.c_str());
}

TEST_CASE("an empty series writes a valid header-only file") {
    ResultSeries series;
    series.metadata = {{"label", "empty"}};
    const std::string path = "series_empty.csv";
    write_series(series, path);
    const ResultSeries back = parse_series(path);
    CHECK(back.time_s.empty());
    CHECK(back.metadata == series.metadata);
    CHECK(!back.has_concurrence());
    std::remove(path.c_str());
}

TEST_CASE("non-finite values are refused before anything is written") {
    ResultSeries series;
    series.time_s = {0.0, 1.0};
    series.p_singlet = {1.0, std::numeric_limits<double>::quiet_NaN()};
    const std::string path = "series_nan.csv";
    CHECK_THROWS_WITH_AS(write_series(series, path),
                         doctest::Contains("p_singlet"), std::invalid_argument);
    CHECK(!std::ifstream(path).good());

    series.p_singlet[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(write_series(series, path), std::invalid_argument);

    series.p_singlet = {1.0};
    CHECK_THROWS_AS(write_series(series, path), std::invalid_argument);
}

TEST_CASE("series parse errors carry the line number") {
    const std::string path = "series_broken.csv";
    {
        std::ofstream out(path);
        out << "# label: broken\n";
        out << "time_s,p_singlet\n";
        out << "0,1\n";
        out << "0.5,not-a-number\n";
    }
    try {
        parse_series(path);
        FAIL_CHECK("expected a parse failure");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find(":4") != std::string::npos);
        CHECK(msg.find(path) != std::string::npos);
    }
    std::remove(path.c_str());

    const std::string headerless = "series_headerless.csv";
    {
        std::ofstream out(headerless);
        out << "# label: broken\n";
    }
    CHECK_THROWS_WITH_AS(parse_series(headerless), doctest::Contains("header"),
                         std::invalid_argument);
    std::remove(headerless.c_str());
}

TEST_CASE("numeric formatting survives a strtod round trip") {
    for (double v : {0.1, 1.0 / 3.0, 1e300, 5e-324, -2.718281828459045, 0.0, 1e-17}) {
        const std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}
