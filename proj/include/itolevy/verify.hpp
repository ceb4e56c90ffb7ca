#pragma once

/**
 * @file verify.hpp
 * @brief Seeded checks that turn each identity of the construction into a
 *        pass/fail report.
 *
 * Two kinds of check exist. Exact checks compare two algebraic routes per
 * path and pass when the largest relative deviation is at most relTol.
 * Statistical checks compare Monte Carlo means; margin is |lhs − rhs| in
 * standard errors of the paired difference and must not exceed `sigmas`.
 * A check made of several sub-tests reports its worst sub-test.
 */

#include "itolevy/scenario.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace itolevy::verify {

enum class CheckKind {
    Isometry1,
    Isometry2,
    Isometry4,
    Orthogonality,
    BasisInvariance,
    IsometryInvariance,
    WellDefined,
    CovarianceRecovery,
    Bracket,
    Martingale,
    SimpleExact,
    SeriesOrthogonality,
    TruncationTail,
};

enum class Fault {
    None,
    RightPoint,
    NonOrthogonalBasis,
};

std::string to_string(CheckKind kind);
std::string to_string(Fault fault);
/// Throws UnknownCheck listing the valid names.
CheckKind parse_check(const std::string& name);
Fault parse_fault(const std::string& name);
const std::vector<std::string>& check_names();

bool is_statistical(CheckKind kind);

struct CheckSpec {
    CheckKind kind = CheckKind::SimpleExact;
    /// isometry2: "seq" | "l2lambda"; bracket: "drivers" | "covariation";
    /// empty selects the default (all parts for bracket).
    std::string variant;
    std::uint64_t nPaths = 100000;
    std::uint64_t seed = 20240101;
    double relTol = 1e-12;
    double sigmas = 4.0;
    Fault fault = Fault::None;
    /// truncation_tail: number of retained modes.
    int jsub = 3;
    /// orthogonality: 0-based mode pairs; empty selects five default pairs.
    std::vector<std::pair<int, int>> pairs;
    /// basis_invariance: number of random H rotations.
    int rotations = 10;

    std::string display_name() const;
    void validate(const Scenario& scenario) const;
};

struct Report {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double se = 0.0;
    double margin = 0.0;
    bool pass = false;
    std::uint64_t nPaths = 0;
    std::uint64_t seed = 0;
    double wallTime = 0.0;
    std::optional<double> truncationBound;
    /// E max over grid nodes of the squared tail norm; console only, not serialized.
    std::optional<double> supSurrogate;
    /// Set when the check could not run; not part of the serialized schema.
    std::string error;
};

/// Deterministic for fixed (scenario, spec) regardless of `threads`
/// (0 = hardware concurrency).
Report run_check(const Scenario& scenario, const CheckSpec& spec, unsigned threads = 1);

/// Reports in input order. A check that throws yields a failed report
/// carrying the error message; the suite carries on.
std::vector<Report> run_suite(const Scenario& scenario, const std::vector<CheckSpec>& specs, unsigned threads = 1);

/// The thirteen default checks in canonical order.
std::vector<CheckSpec> default_checks(std::uint64_t nPaths = 100000, std::uint64_t seed = 20240101);

/// Deviation between the Jsub-mode truncated and the full operator integral
/// against the isometry tail E∫Σ_{j>Jsub}‖X e_j‖² ds.
Report truncation_report(const Scenario& scenario, int jsub, std::uint64_t nPaths, std::uint64_t seed,
                         unsigned threads = 1);

/// Scenario with the fault applied (integrand sampling or eigenbasis).
Scenario inject_fault(const Scenario& scenario, Fault fault);

/// ‖a − b‖ / max(‖a‖, ‖b‖, scale); 0 when everything vanishes.
double relative_deviation(const Vector& a, const Vector& b, double scale = 0.0);

} // namespace itolevy::verify
