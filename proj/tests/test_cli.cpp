#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "spintool/cli.hpp"
#include "spintool/trace_io.hpp"

using namespace spintool;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "spintool_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

fs::path paper_config() {
    const auto p = temp_file("system.json");
    write_text(p, R"({
        "field_gauss": 81.0,
        "subspace": [0.5, 1.5],
        "nuclei": [
            {"species": "29Si", "a_par_khz": -23.5, "a_perp_khz": 12.0},
            {"species": "29Si", "a_par_khz": 0.2, "a_perp_khz": 8.5}
        ]
    })");
    return p;
}

struct CliOut {
    int status = 0;
    std::string out;
    std::string err;
};

CliOut run_cli(const std::vector<std::string>& args) {
    std::ostringstream captured_out, captured_err;
    auto* old_out = std::cout.rdbuf(captured_out.rdbuf());
    auto* old_err = std::cerr.rdbuf(captured_err.rdbuf());
    CliOut r;
    r.status = cli::run(args);
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    r.out = captured_out.str();
    r.err = captured_err.str();
    return r;
}

} // namespace

TEST_CASE("trace csv round trip") {
    SignalTrace t{{1.0, 2.5, 3.125}, {0.123456789012, -1.0, 0.0}, "us"};
    const auto p = temp_file("trace.csv");
    write_trace_csv(t, p.string());
    const auto back = read_trace_csv(p.string());
    CHECK(back.unit == "us");
    REQUIRE(back.values.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(back.abscissa[i] == doctest::Approx(t.abscissa[i]).epsilon(1e-12));
        CHECK(back.values[i] == doctest::Approx(t.values[i]).epsilon(1e-11));
    }
}

TEST_CASE("dataset csv round trip with uncertainties") {
    DataSet d{{0.0, 1.0}, {2.0, 3.0}, {0.1, 0.2}, "us", ""};
    const auto p = temp_file("data.csv");
    write_dataset_csv(d, p.string());
    const auto back = read_dataset_csv(p.string());
    REQUIRE(back.sigma.size() == 2);
    CHECK(back.x[1] == 1.0);
    CHECK(back.sigma[1] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("csv parse errors carry the file and line") {
    const auto p = temp_file("bad.csv");
    write_text(p, "x,y\n1.0,2.0\nnot-a-number,3.0\n");
    try {
        read_dataset_csv(p.string());
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.file == p.string());
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    CHECK_THROWS_AS(read_trace_csv(temp_file("missing.csv").string()), ParseError);
}

TEST_CASE("resonance command") {
    const auto r = run_cli({"resonance", "--system", paper_config().string(), "--spin", "0"});
    REQUIRE(r.status == 0);
    const auto j = json::parse(r.out);
    CHECK(j.at("tau_zero_us").get<double>() == doctest::Approx(5.2631).epsilon(1e-4));
    CHECK(j.at("tau_approx_us").get<double>() == doctest::Approx(5.38).epsilon(2e-3));
    CHECK(std::abs(j.at("rel_error").get<double>()) < 0.0026);
}

TEST_CASE("bcrit command") {
    const auto p = temp_file("fitted.json");
    write_text(p, R"({"field_gauss": 81.0, "subspace": [0.5, 1.5],
        "nuclei": [{"species": "29Si", "a_par_khz": -23.6, "a_perp_khz": 12.2}]})");
    const auto r = run_cli({"bcrit", "--system", p.string()});
    REQUIRE(r.status == 0);
    CHECK(json::parse(r.out).at("b_crit_gauss").get<double>() ==
          doctest::Approx(60.5).epsilon(4e-3));
}

TEST_CASE("simulate writes a readable trace and is deterministic") {
    const auto sys = paper_config();
    const auto out1 = temp_file("sweep1.csv");
    const auto out2 = temp_file("sweep2.csv");
    const std::vector<std::string> base{"simulate", "cpmg", "--system", sys.string(),
                                        "--n", "8", "--points", "500"};
    auto args1 = base;
    args1.insert(args1.end(), {"--out", out1.string()});
    auto args2 = base;
    args2.insert(args2.end(), {"--out", out2.string()});
    const auto r1 = run_cli(args1);
    const auto r2 = run_cli(args2);
    REQUIRE(r1.status == 0);
    REQUIRE(r2.status == 0);

    const auto j = json::parse(r1.out);
    CHECK(j.at("min_abscissa").get<double>() == doctest::Approx(5.38).epsilon(0.01));
    CHECK(j.at("min_value").get<double>() < -0.9);

    const auto trace = read_trace_csv(out1.string());
    CHECK(trace.values.size() == 500);
    CHECK(trace.unit == "us");

    // byte-identical output files and identical json apart from the path
    std::ifstream f1(out1), f2(out2);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    auto ja = json::parse(r1.out), jb = json::parse(r2.out);
    ja.erase("out");
    jb.erase("out");
    CHECK(ja == jb);
}

TEST_CASE("fit envelope command round trip") {
    DataSet d;
    for (int i = 0; i < 60; ++i) {
        const double t = 3000.0 * i / 59.0;
        d.x.push_back(t);
        d.y.push_back(0.9 * std::exp(-std::pow(t / 840.0, 1.5)) + 0.05);
    }
    const auto p = temp_file("decay.csv");
    write_dataset_csv(d, p.string());
    const auto r = run_cli({"fit", "envelope", "--data", p.string()});
    REQUIRE(r.status == 0);
    const auto j = json::parse(r.out);
    CHECK(j.at("converged").get<bool>());
    CHECK(j.at("params").at("t2").get<double>() == doctest::Approx(840.0).epsilon(0.02));
}

TEST_CASE("analyze yield command") {
    const auto r = run_cli({"analyze", "yield", "--histogram", "50,36,12,2", "--dose",
                            "1e11", "--hole-diameter", "100"});
    REQUIRE(r.status == 0);
    const auto j = json::parse(r.out);
    CHECK(j.at("mean").get<double>() == doctest::Approx(0.66).epsilon(1e-9));
    CHECK(j.at("expected_ions").get<double>() == doctest::Approx(7.85).epsilon(1e-3));
    CHECK(100.0 * j.at("yield").get<double>() == doctest::Approx(8.4).epsilon(0.01));
}

TEST_CASE("reproduce checks") {
    const auto ok = run_cli({"reproduce", "tau538"});
    CHECK(ok.status == 0);
    CHECK(json::parse(ok.out).at("pass").get<bool>());
    const auto unknown = run_cli({"reproduce", "nosuchcheck"});
    CHECK(unknown.status == 2);
    CHECK(unknown.err.find("error:") != std::string::npos);
}

TEST_CASE("usage and input errors exit with status 2") {
    CHECK(run_cli({}).status == 2);
    CHECK(run_cli({"frobnicate"}).status == 2);
    CHECK(run_cli({"resonance"}).status == 2); // missing --system
    CHECK(run_cli({"resonance", "--system", "/nonexistent.json"}).status == 2);
    CHECK(run_cli({"resonance", "--system", paper_config().string(), "--spin", "9"}).status ==
          2);

    const auto badjson = temp_file("broken.json");
    write_text(badjson, "{ not json");
    CHECK(run_cli({"resonance", "--system", badjson.string()}).status == 2);

    const auto badcsv = temp_file("broken.csv");
    write_text(badcsv, "x,y\n1,huh\n");
    const auto r = run_cli({"fit", "envelope", "--data", badcsv.string()});
    CHECK(r.status == 2);
    CHECK(r.err.find(badcsv.string()) != std::string::npos);

    const auto badspecies = temp_file("badspecies.json");
    write_text(badspecies, R"({"field_gauss": 81.0, "subspace": [0.5, 1.5],
        "nuclei": [{"species": "31P", "a_par_khz": 1.0, "a_perp_khz": 1.0}]})");
    CHECK(run_cli({"resonance", "--system", badspecies.string()}).status == 2);
}

TEST_CASE("gates command") {
    const auto r = run_cli({"gates", "--system", paper_config().string(), "--spin", "0",
                            "--n", "4", "--tau", "5.38", "--target", "bell"});
    REQUIRE(r.status == 0);
    const auto j = json::parse(r.out);
    CHECK(j.at("fidelity").get<double>() == doctest::Approx(0.9721).epsilon(1e-3));
    CHECK(j.at("axis_u").size() == 3);
}
