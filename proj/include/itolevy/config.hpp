#pragma once

// Experiment configuration: a JSON document describing the space, covariance,
// drivers, integrand, Monte Carlo settings, checks and outputs. Parsing is
// strict: unknown keys and malformed values raise ConfigInvalid naming the key.

#include "itolevy/scenario.hpp"
#include "itolevy/verify.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace itolevy::cli {

struct SpaceSection {
    int dH = 1;
    int J = 1;
    double T = 1.0;
    int nScheduled = 1;
    bool operator==(const SpaceSection&) const = default;
};

/// λ_j = c·j^(−p) ("power") or λ_j = c·r^j ("geometric"), j = 1..J.
struct LawSection {
    std::string kind;
    double c = 1.0;
    double p = 0.0;
    double r = 0.0;
    std::optional<int> J;
    bool operator==(const LawSection&) const = default;
};

struct CovarianceSection {
    std::optional<std::vector<double>> eigenvalues;
    std::optional<LawSection> law;
    /// Empty means the identity basis.
    std::optional<std::uint64_t> basisSeed;
    std::optional<double> tailMass;
    bool operator==(const CovarianceSection&) const = default;
};

struct JumpEntry {
    double size = 0.0;
    double intensity = 0.0;
    bool operator==(const JumpEntry&) const = default;
};

/// One driver: a preset (brownian, poisson, mixed) or explicit {sigma, jumps}.
struct DriverEntry {
    std::optional<std::string> preset;
    std::optional<double> sigma;
    std::optional<double> a;
    std::vector<JumpEntry> jumps;
    bool operator==(const DriverEntry&) const = default;
};

struct DriversSection {
    /// One entry for all components or one per component.
    std::vector<DriverEntry> entries;
    /// Fixed per-cell increments on the scheduled grid, one row per component.
    std::optional<std::vector<std::vector<double>>> explicitIncrements;
    bool operator==(const DriversSection&) const = default;
};

struct IntegrandSection {
    std::string family = "grid";
    std::string evaluator = "feedback";
    std::uint64_t seed = 11;
    double scale = 1.0;
    std::vector<double> breakpoints;
    /// values[step][row][column], each dH×J.
    std::vector<std::vector<std::vector<double>>> values;
    bool operator==(const IntegrandSection&) const = default;
};

struct McSection {
    std::uint64_t nPaths = 100000;
    std::uint64_t seed = 20240101;
    unsigned threads = 0;
    bool operator==(const McSection&) const = default;
};

struct CheckEntry {
    std::string name;
    std::optional<std::string> variant;
    std::optional<std::uint64_t> nPaths;
    std::optional<std::uint64_t> seed;
    std::optional<double> relTol;
    std::optional<double> sigmas;
    std::optional<std::string> fault;
    std::optional<int> jsub;
    std::optional<std::vector<std::pair<int, int>>> pairs;
    std::optional<int> rotations;

    static CheckEntry named(std::string n)
    {
        CheckEntry c;
        c.name = std::move(n);
        return c;
    }
    bool operator==(const CheckEntry&) const = default;
};

struct OutputSection {
    std::string path = ".";
    std::string format = "json";
    /// Record measured wall times in reports; off keeps reports byte-stable.
    bool timing = false;
    std::uint64_t pathIndex = 0;
    bool operator==(const OutputSection&) const = default;
};

struct ExperimentConfig {
    SpaceSection space;
    CovarianceSection covariance;
    DriversSection drivers;
    std::optional<IntegrandSection> integrand;
    McSection mc;
    std::vector<CheckEntry> checks;
    OutputSection output;
    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& text);
/// ConfigNotFound when the file cannot be read.
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON rendering; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// Eigenvalues after expanding a law.
space::Vector resolve_eigenvalues(const ExperimentConfig& config);
/// Tail mass beyond J: explicit value, or the analytic tail of the law.
double resolve_tail_mass(const ExperimentConfig& config);

verify::Scenario build_scenario(const ExperimentConfig& config);
verify::CheckSpec build_check(const ExperimentConfig& config, const CheckEntry& entry);
/// Checks listed in the config; the default suite when none are listed.
std::vector<verify::CheckSpec> build_checks(const ExperimentConfig& config);

} // namespace itolevy::cli
