#include "itolevy/commands.hpp"

#include "itolevy/config.hpp"
#include "itolevy/error.hpp"
#include "itolevy/format.hpp"
#include "itolevy/integrator.hpp"
#include "itolevy/report_io.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace itolevy::cli {

namespace fs = std::filesystem;

namespace {

struct Loaded {
    ExperimentConfig config;
    verify::Scenario scenario;
};

Loaded load(const CommandOptions& options)
{
    require(!options.configPath.empty(), ErrorCode::ConfigInvalid, "--config is required");
    Loaded l;
    l.config = load_config(options.configPath);
    if (options.seed) {
        l.config.mc.seed = *options.seed;
    }
    if (options.paths) {
        l.config.mc.nPaths = *options.paths;
    }
    if (options.format) {
        require(*options.format == "json" || *options.format == "csv", ErrorCode::ConfigInvalid,
                "--format must be json or csv");
        l.config.output.format = *options.format;
    }
    l.scenario = build_scenario(l.config);
    return l;
}

fs::path output_file(const ExperimentConfig& config, const CommandOptions& options, const std::string& fallback)
{
    if (options.out) {
        return *options.out;
    }
    const char* env = std::getenv(kOutputDirEnv);
    const fs::path dir = env && *env ? fs::path(env) : fs::path(config.output.path);
    return dir / fallback;
}

fs::path sibling(const fs::path& file, const std::string& suffix)
{
    return file.parent_path() / (file.stem().string() + suffix);
}

void write_file(const fs::path& file, const std::string& content)
{
    if (file.has_parent_path()) {
        fs::create_directories(file.parent_path());
    }
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::InvalidArgument, "cannot write '" + file.string() + "'");
    out << content;
    require(static_cast<bool>(out), ErrorCode::InvalidArgument, "failed writing '" + file.string() + "'");
}

template <class Body>
int guarded(std::ostream& err, Body body)
{
    try {
        return body();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

nlohmann::ordered_json vector_json(const space::Vector& v)
{
    auto out = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

} // namespace

int cmd_simulate(const CommandOptions& options, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const Loaded l = load(options);
        const process::SamplePath path = l.scenario.sampler.sample(l.config.mc.seed, l.config.output.pathIndex);
        const fs::path file = output_file(l.config, options, "paths.csv");
        write_file(file, process::to_csv(path));
        out << "wrote " << file.string() << " (" << path.grid().nodes() << " nodes)\n";
        return 0;
    });
}

int cmd_integrate(const CommandOptions& options, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const Loaded l = load(options);
        require(l.config.integrand.has_value(), ErrorCode::ConfigInvalid, "integrand: missing");
        const auto x = verify::make_operator_integrand(l.scenario);
        const process::SamplePath driver = l.scenario.sampler.sample(l.config.mc.seed, l.config.output.pathIndex);
        const process::LevyPath levy(l.scenario.covariance, driver);
        const integrator::IntegralPath total = integrator::ito_general(x, levy);
        const auto terms = integrator::series_terms(x, levy);

        const fs::path file = output_file(l.config, options, "integral.csv");
        write_file(file, total.to_csv());

        nlohmann::ordered_json summary;
        summary["seed"] = l.config.mc.seed;
        summary["pathIndex"] = l.config.output.pathIndex;
        summary["terminal"] = vector_json(total.terminal());
        summary["terminalNorm"] = total.terminal().norm();
        auto modes = nlohmann::ordered_json::array();
        for (const auto& term : terms) {
            modes.push_back(vector_json(term.terminal()));
        }
        summary["seriesTerminals"] = modes;
        write_file(sibling(file, "_summary.json"), summary.dump(2) + "\n");

        if (options.dumpSeries) {
            for (std::size_t j = 0; j < terms.size(); ++j) {
                write_file(sibling(file, "_series_" + std::to_string(j + 1) + ".csv"), terms[j].to_csv());
            }
        }
        out << "terminal norm " << format_double(total.terminal().norm()) << "\nwrote " << file.string() << '\n';
        return 0;
    });
}

int cmd_check(const CommandOptions& options, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const Loaded l = load(options);
        require(!(options.suite && !options.checks.empty()), ErrorCode::ConfigInvalid,
                "--check and --suite are mutually exclusive");
        if (options.suite) {
            require(*options.suite == "default", ErrorCode::ConfigInvalid, "--suite must be default");
        }

        std::vector<verify::CheckSpec> specs;
        if (options.suite) {
            for (const auto& name : verify::check_names()) {
                specs.push_back(build_check(l.config, CheckEntry::named(name)));
            }
        } else if (!options.checks.empty()) {
            for (const auto& name : options.checks) {
                verify::parse_check(name);
                CheckEntry entry = CheckEntry::named(name);
                for (const auto& configured : l.config.checks) {
                    if (configured.name == name) {
                        entry = configured;
                        break;
                    }
                }
                specs.push_back(build_check(l.config, entry));
            }
        } else {
            specs = build_checks(l.config);
        }

        const verify::Fault fault =
            options.negativeControl ? verify::parse_fault(*options.negativeControl) : verify::Fault::None;
        for (auto& spec : specs) {
            if (options.paths) {
                spec.nPaths = *options.paths;
            }
            if (options.seed) {
                spec.seed = *options.seed;
            }
            if (options.negativeControl) {
                spec.fault = fault;
            }
            spec.validate(l.scenario);
        }

        auto reports = verify::run_suite(l.scenario, specs, l.config.mc.threads);
        bool allPass = true;
        for (auto& r : reports) {
            if (!l.config.output.timing) {
                r.wallTime = 0.0;
            }
            allPass = allPass && r.pass;
            out << (r.pass ? "PASS " : "FAIL ") << r.name << " lhs=" << format_double(r.lhs)
                << " rhs=" << format_double(r.rhs) << " se=" << format_double(r.se)
                << " margin=" << format_double(r.margin);
            if (r.supSurrogate) {
                out << " sup=" << format_double(*r.supSurrogate);
            }
            out << '\n';
            if (!r.error.empty()) {
                err << "error in " << r.name << ": " << r.error << '\n';
            }
        }

        const bool csv = l.config.output.format == "csv";
        const fs::path file = output_file(l.config, options, csv ? "reports.csv" : "reports.json");
        write_file(file, csv ? reports_to_csv(reports) : reports_to_json(reports));

        if (options.negativeControl) {
            const bool detected = !allPass;
            out << "negative control " << *options.negativeControl << (detected ? ": detected" : ": NOT detected")
                << '\n';
            return detected ? 0 : 1;
        }
        return allPass ? 0 : 1;
    });
}

} // namespace itolevy::cli
