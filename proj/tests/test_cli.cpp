#include "itolevy/commands.hpp"
#include "itolevy/config.hpp"
#include "itolevy/error.hpp"
#include "itolevy/report_io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace itolevy;
using namespace itolevy::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch()
{
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("itolevy_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string write_config(const std::string& name, const std::string& text)
{
    const fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p.string();
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

struct Run {
    int status;
    std::string out;
    std::string err;
};

template <class Cmd>
Run run(Cmd cmd, const CommandOptions& o)
{
    std::ostringstream out, err;
    const int status = cmd(o, out, err);
    return {status, out.str(), err.str()};
}

CommandOptions opts(const std::string& config, const std::string& out)
{
    CommandOptions o;
    o.configPath = config;
    o.out = (scratch() / out).string();
    return o;
}

const char* kBrownian = R"({
  "space": {"dH": 1, "J": 1, "T": 1.0, "nScheduled": 10},
  "covariance": {"eigenvalues": [1.0]},
  "drivers": {"preset": "brownian"},
  "mc": {"seed": 3}
})";

const char* kPoisson = R"({
  "space": {"dH": 1, "J": 2, "T": 1.0, "nScheduled": 4},
  "covariance": {"eigenvalues": [0.5, 0.25], "basis": {"seed": 2}},
  "drivers": [{"preset": "poisson", "a": 0.5}, {"sigma": 0.6, "jumps": [{"size": 0.8, "intensity": 1.0}]}],
  "mc": {"seed": 3}
})";

const char* kTwoModes = R"({
  "space": {"dH": 1, "J": 2, "T": 1.0, "nScheduled": 1},
  "covariance": {"eigenvalues": [0.5, 0.25], "basis": "identity"},
  "drivers": {"explicit": [[1.0], [2.0]]},
  "integrand": {"family": "grid", "evaluator": "explicit", "values": [[[1.0, 3.0]]]}
})";

const char* kDeskSmall = R"({
  "space": {"dH": 4, "J": 6, "T": 1.0, "nScheduled": 16},
  "covariance": {"eigenvalues": [0.4, 0.3, 0.3, 0.15, 0.1, 0.05], "basis": {"seed": 7}},
  "drivers": [{"preset": "brownian"}, {"preset": "poisson", "a": 0.5}, {"preset": "mixed", "sigma": 0.7071067811865476, "a": 1.0},
              {"preset": "brownian"}, {"preset": "poisson", "a": 0.5}, {"preset": "mixed", "sigma": 0.7071067811865476, "a": 1.0}],
  "integrand": {"family": "grid", "evaluator": "feedback", "seed": 11},
  "mc": {"nPaths": 2048, "seed": 17, "threads": 1}
})";

} // namespace

TEST_CASE("config round trip")
{
    for (const char* text : {kBrownian, kPoisson, kTwoModes, kDeskSmall}) {
        const auto a = parse_config(text);
        const auto b = parse_config(serialize_config(a));
        CHECK(a == b);
        CHECK(serialize_config(a) == serialize_config(b));
    }
    const auto law = parse_config(R"({
      "space": {"dH": 2, "J": 3, "T": 1.0, "nScheduled": 4},
      "covariance": {"law": {"kind": "power", "c": 1.0, "p": 2.0, "J": 3}, "tailMass": 0.25},
      "drivers": [{"preset": "mixed", "sigma": 0.5, "a": 2.0}],
      "checks": ["bracket", {"name": "orthogonality", "pairs": [[0, 1]], "nPaths": 10, "fault": "right_point"}],
      "output": {"path": "x", "format": "csv", "timing": true, "pathIndex": 4}
    })");
    CHECK(parse_config(serialize_config(law)) == law);
}

TEST_CASE("covariance laws expand to eigenvalues and tail mass")
{
    auto c = parse_config(R"({
      "space": {"dH": 1, "J": 4, "T": 1.0, "nScheduled": 1},
      "covariance": {"law": {"kind": "geometric", "c": 2.0, "r": 0.5}},
      "drivers": {"preset": "brownian"}
    })");
    const auto lambda = resolve_eigenvalues(c);
    CHECK(lambda(0) == 1.0);
    CHECK(lambda(3) == 0.125);
    CHECK(resolve_tail_mass(c) == doctest::Approx(0.125).epsilon(1e-15));

    c.covariance.law = LawSection{"power", 1.0, 2.0, 0.0, std::nullopt};
    const auto power = resolve_eigenvalues(c);
    CHECK(power(1) == 0.25);
    // Σ_{j>4} j^-2 = π²/6 − (1 + 1/4 + 1/9 + 1/16)
    const double tail = M_PI * M_PI / 6.0 - (1.0 + 0.25 + 1.0 / 9.0 + 0.0625);
    CHECK(resolve_tail_mass(c) == doctest::Approx(tail).epsilon(1e-12));
}

TEST_CASE("config errors name the offending key")
{
    auto message = [](const std::string& text) {
        try {
            build_scenario(parse_config(text));
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ConfigInvalid);
            return std::string(e.what());
        }
        FAIL("expected ConfigInvalid");
        return std::string();
    };
    CHECK(message(R"({"space": {"dH": 1, "J": 1, "T": 1, "nScheduled": 1, "extra": 2},
                     "covariance": {"eigenvalues": [1]}, "drivers": {"preset": "brownian"}})")
              .find("space.extra") != std::string::npos);
    CHECK(message(R"({"space": {"dH": 1, "J": 2, "T": 1, "nScheduled": 1},
                     "covariance": {"eigenvalues": [1]}, "drivers": {"preset": "brownian"}})")
              .find("covariance.eigenvalues") != std::string::npos);
    CHECK(message(R"({"space": {"dH": 1, "J": 1, "T": -1, "nScheduled": 1},
                     "covariance": {"eigenvalues": [1]}, "drivers": {"preset": "brownian"}})")
              .find("space.T") != std::string::npos);
    CHECK(message(R"({"space": {"dH": 1, "J": 1, "T": 1, "nScheduled": 1},
                     "covariance": {"eigenvalues": [1]}, "drivers": [{"sigma": 0.5}]})")
              .find("drivers") != std::string::npos);
    CHECK(message(R"({"space": {"dH": 1, "J": 1, "T": 1, "nScheduled": 1},
                     "covariance": {"eigenvalues": [1]}, "drivers": {"preset": "brownian"},
                     "mc": {"nPaths": 0}})")
              .find("mc.nPaths") != std::string::npos);
    CHECK(message("{not json").find("malformed") != std::string::npos);
}

TEST_CASE("cmd_simulate")
{
    const auto config = write_config("brownian.json", kBrownian);
    const auto r = run(cmd_simulate, opts(config, "b1.csv"));
    CHECK(r.status == 0);
    const auto rows = lines(slurp(scratch() / "b1.csv"));
    CHECK(rows.size() == 1 + 11);
    CHECK(rows[0] == "time,kind,M1");
    CHECK(rows[1] == "0,scheduled,0");

    run(cmd_simulate, opts(config, "b2.csv"));
    CHECK(slurp(scratch() / "b1.csv") == slurp(scratch() / "b2.csv"));

    const auto poisson = write_config("poisson.json", kPoisson);
    CHECK(run(cmd_simulate, opts(poisson, "p.csv")).status == 0);
    const auto text = slurp(scratch() / "p.csv");
    CHECK(lines(text)[0] == "time,kind,M1,M2");
    CHECK(text.find(",jump,") != std::string::npos);

    CommandOptions missing = opts((scratch() / "nope.json").string(), "x.csv");
    const auto m = run(cmd_simulate, missing);
    CHECK(m.status == 2);
    CHECK(m.err.find("ConfigNotFound") != std::string::npos);
}

TEST_CASE("cmd_integrate: worked case, zero integrand and series dump")
{
    const auto config = write_config("two_modes.json", kTwoModes);
    CommandOptions o = opts(config, "two/integral.csv");
    o.dumpSeries = true;
    REQUIRE(run(cmd_integrate, o).status == 0);
    const auto summary = nlohmann::json::parse(slurp(scratch() / "two/integral_summary.json"));
    const double expected = std::sqrt(0.5) + 3.0;
    CHECK(std::abs(summary["terminal"][0].get<double>() - expected) <= 1e-12 * expected);
    CHECK(std::abs(summary["terminalNorm"].get<double>() - expected) <= 1e-12 * expected);
    CHECK(summary["seriesTerminals"][1][0].get<double>() == 3.0);

    // per-term files sum to the total
    const auto total = lines(slurp(scratch() / "two/integral.csv"));
    const auto t1 = lines(slurp(scratch() / "two/integral_series_1.csv"));
    const auto t2 = lines(slurp(scratch() / "two/integral_series_2.csv"));
    REQUIRE(total.size() == t1.size());
    for (std::size_t row = 1; row < total.size(); ++row) {
        auto last = [](const std::string& s) { return std::stod(s.substr(s.rfind(',') + 1)); };
        const double sum = last(t1[row]) + last(t2[row]);
        CHECK(std::abs(sum - last(total[row])) <= 1e-12 * std::max(1.0, std::abs(last(total[row]))));
    }

    auto zero = parse_config(kTwoModes);
    zero.integrand->evaluator = "zero";
    zero.integrand->values.clear();
    const auto zpath = write_config("zero.json", serialize_config(zero));
    REQUIRE(run(cmd_integrate, opts(zpath, "zero/integral.csv")).status == 0);
    const auto zs = nlohmann::json::parse(slurp(scratch() / "zero/integral_summary.json"));
    CHECK(zs["terminalNorm"].get<double>() == 0.0);

    const auto noIntegrand = write_config("nointegrand.json", kBrownian);
    CHECK(run(cmd_integrate, opts(noIntegrand, "n.csv")).status == 2);
}

TEST_CASE("cmd_check: single checks, validation and formats")
{
    const auto config = write_config("desk_small.json", kDeskSmall);
    CommandOptions o = opts(config, "simple.json");
    o.checks = {"simple_exact"};
    o.paths = 100;
    const auto r = run(cmd_check, o);
    CHECK(r.status == 0);
    const auto reports = reports_from_json(slurp(scratch() / "simple.json"));
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].pass);
    CHECK(reports[0].margin <= 1e-12);
    CHECK(reports[0].wallTime == 0.0);

    CommandOptions one = opts(config, "one.json");
    one.checks = {"isometry1"};
    one.paths = 1;
    const auto bad = run(cmd_check, one);
    CHECK(bad.status == 2);
    CHECK(bad.err.find("ConfigInvalid") != std::string::npos);

    CommandOptions unknown = opts(config, "u.json");
    unknown.checks = {"isometry9"};
    const auto u = run(cmd_check, unknown);
    CHECK(u.status == 2);
    CHECK(u.err.find("valid checks") != std::string::npos);

    CommandOptions csv = opts(config, "r.csv");
    csv.checks = {"truncation_tail", "bracket"};
    csv.format = "csv";
    csv.paths = 512;
    REQUIRE(run(cmd_check, csv).status == 0);
    const auto rows = lines(slurp(scratch() / "r.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "name,lhs,rhs,se,margin,pass,nPaths,seed,wallTime,truncationBound");
    CHECK(rows[1].rfind("truncation_tail,", 0) == 0);
    CHECK(rows[1].back() != ',');
    CHECK(rows[2].back() == ',');

    const auto json = nlohmann::ordered_json::parse(slurp(scratch() / "simple.json"));
    std::vector<std::string> keys;
    for (const auto& item : json[0].items()) {
        keys.push_back(item.key());
    }
    CHECK(keys == std::vector<std::string>{"name", "lhs", "rhs", "se", "margin", "pass", "nPaths", "seed", "wallTime"});
}

TEST_CASE("cmd_check: suite, determinism and negative controls")
{
    auto config = parse_config(kDeskSmall);
    const auto path1 = write_config("suite1.json", serialize_config(config));
    config.mc.threads = 3;
    const auto path3 = write_config("suite3.json", serialize_config(config));

    CommandOptions a = opts(path1, "suite_a.json");
    a.suite = "default";
    CommandOptions b = opts(path3, "suite_b.json");
    b.suite = "default";
    const auto ra = run(cmd_check, a);
    const auto rb = run(cmd_check, b);
    CHECK(ra.status == 0);
    CHECK(rb.status == 0);
    const auto text = slurp(scratch() / "suite_a.json");
    CHECK(reports_from_json(text).size() == 13);
    CHECK(text == slurp(scratch() / "suite_b.json"));

    CommandOptions control = opts(path1, "control.json");
    control.suite = "default";
    control.paths = 8192;
    control.negativeControl = "right_point";
    const auto rc = run(cmd_check, control);
    CHECK(rc.status == 0);
    CHECK(rc.out.find("detected") != std::string::npos);
}

TEST_CASE("output directory override")
{
    const auto config = write_config("env.json", kBrownian);
    const fs::path dir = scratch() / "envdir";
    ::setenv(kOutputDirEnv, dir.c_str(), 1);
    CommandOptions o;
    o.configPath = config;
    const auto r = run(cmd_simulate, o);
    ::unsetenv(kOutputDirEnv);
    CHECK(r.status == 0);
    CHECK(fs::exists(dir / "paths.csv"));
}
