#include "itolevy/error.hpp"
#include "itolevy/verify.hpp"

#include <doctest.h>

#include <cmath>

using namespace itolevy;
using namespace itolevy::verify;

namespace {

CheckSpec spec_of(CheckKind kind, std::uint64_t nPaths, std::uint64_t seed = 20240101)
{
    CheckSpec s;
    s.kind = kind;
    s.nPaths = nPaths;
    s.seed = seed;
    return s;
}

/// The (1, -1) worked case: dH=2, J=1, T=2, simple steps (1,0) then (0,2).
Scenario worked_simple()
{
    Scenario s;
    s.space = {2, 1, 2.0};
    s.covariance = space::make_covariance(Vector::Ones(1), space::IdentityBasis{});
    s.sampler.horizon = 2.0;
    s.sampler.nScheduled = 2;
    s.sampler.specs = process::make_standard_specs(1, std::vector<process::Preset>{process::Preset::brownian()});
    s.sampler.explicitIncrements = std::vector<std::vector<double>>{{1.0, -0.5}};
    s.integrand.family = IntegrandFamily::Simple;
    s.integrand.evaluator = Evaluator::Explicit;
    s.integrand.breakpoints = {0.0, 1.0, 2.0};
    s.integrand.values = {Matrix{{1.0}, {0.0}}, Matrix{{0.0}, {2.0}}};
    return s;
}

Scenario small_desk()
{
    Scenario s = desk_scenario();
    s.sampler.nScheduled = 16;
    return s;
}

} // namespace

TEST_CASE("check names round trip")
{
    REQUIRE(check_names().size() == 13);
    for (const auto& name : check_names()) {
        CHECK(to_string(parse_check(name)) == name);
    }
    try {
        parse_check("isometry3");
        FAIL("expected UnknownCheck");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownCheck);
        CHECK(std::string(e.what()).find("series_orthogonality") != std::string::npos);
    }
}

TEST_CASE("simple_exact on the worked case has margin 0")
{
    const auto r = run_check(worked_simple(), spec_of(CheckKind::SimpleExact, 1));
    CHECK(r.pass);
    CHECK(r.margin == 0.0);
    CHECK(r.lhs == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("isometry1 with a zero integrand")
{
    Scenario s = small_desk();
    s.integrand.evaluator = Evaluator::Zero;
    const auto r = run_check(s, spec_of(CheckKind::Isometry1, 64));
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs == 0.0);
    CHECK(r.margin == 0.0);
    CHECK(r.pass);
}

TEST_CASE("statistical checks need two paths")
{
    try {
        run_check(small_desk(), spec_of(CheckKind::Isometry1, 1));
        FAIL("expected ConfigInvalid");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigInvalid);
    }
    CHECK_NOTHROW(run_check(small_desk(), spec_of(CheckKind::SimpleExact, 1)));
}

TEST_CASE("statistical checks reject explicit increments")
{
    try {
        run_check(worked_simple(), spec_of(CheckKind::Isometry1, 16));
        FAIL("expected ConfigInvalid");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigInvalid);
    }
    CHECK(run_check(worked_simple(), spec_of(CheckKind::WellDefined, 1)).pass);
}

TEST_CASE("every check passes at moderate size")
{
    const Scenario s = small_desk();
    for (const auto& spec : default_checks(4096, 99)) {
        const Report r = run_check(s, spec);
        INFO(r.name << " margin " << r.margin);
        CHECK(r.pass);
        CHECK(r.nPaths == 4096);
        CHECK(r.seed == 99);
    }
}

TEST_CASE("check variants")
{
    const Scenario s = small_desk();
    for (const char* v : {"seq", "l2lambda"}) {
        CheckSpec c = spec_of(CheckKind::Isometry2, 4096);
        c.variant = v;
        CHECK(run_check(s, c).pass);
        CHECK(run_check(s, c).name == std::string("isometry2/") + v);
    }
    for (const char* v : {"drivers", "covariation"}) {
        CheckSpec c = spec_of(CheckKind::Bracket, 4096);
        c.variant = v;
        CHECK(run_check(s, c).pass);
    }
    CheckSpec bad = spec_of(CheckKind::Isometry1, 16);
    bad.variant = "l2lambda";
    CHECK_THROWS_AS(run_check(s, bad), Error);
}

TEST_CASE("run_suite: empty, ordered, deterministic across threads")
{
    CHECK(run_suite(small_desk(), {}).empty());
    const auto specs = default_checks(3000, 5);
    auto a = run_suite(small_desk(), specs, 1);
    auto b = run_suite(small_desk(), specs, 3);
    REQUIRE(a.size() == 13);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].name == check_names()[i]);
        CHECK(a[i].name == b[i].name);
        CHECK(a[i].lhs == b[i].lhs);
        CHECK(a[i].rhs == b[i].rhs);
        CHECK(a[i].se == b[i].se);
        CHECK(a[i].margin == b[i].margin);
        CHECK(a[i].pass == b[i].pass);
    }
}

TEST_CASE("run_suite keeps going after a failing check")
{
    CheckSpec bad = spec_of(CheckKind::TruncationTail, 16);
    bad.jsub = 0;
    const auto reports = run_suite(small_desk(), {bad, spec_of(CheckKind::SimpleExact, 4)});
    REQUIRE(reports.size() == 2);
    CHECK_FALSE(reports[0].pass);
    CHECK_FALSE(reports[0].error.empty());
    CHECK(reports[1].pass);
}

TEST_CASE("truncation_report")
{
    const Scenario s = small_desk();
    const auto full = truncation_report(s, 6, 64, 3);
    CHECK(full.lhs == 0.0);
    CHECK(full.truncationBound.value() == 0.0);
    try {
        truncation_report(s, 0, 64, 3);
        FAIL("expected IndexOutOfRange");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IndexOutOfRange);
    }
    CHECK_THROWS_AS(truncation_report(s, 7, 64, 3), Error);

    // an integrand supported on the first mode has no tail
    Scenario rank1 = s;
    rank1.covariance = space::make_covariance(s.covariance.eigenvalues(), space::IdentityBasis{});
    rank1.integrand.evaluator = Evaluator::Explicit;
    Matrix v = Matrix::Zero(4, 6);
    v.col(0) << 1.0, -2.0, 0.5, 3.0;
    rank1.integrand.values = {v};
    for (int jsub = 1; jsub <= 6; ++jsub) {
        const auto r = truncation_report(rank1, jsub, 64, 3);
        CHECK(r.lhs == 0.0);
        CHECK(r.truncationBound.value() == 0.0);
    }
}

TEST_CASE("truncation tail matches the analytic bound for a constant integrand")
{
    Scenario s = small_desk();
    Vector lambda(6);
    for (int j = 0; j < 6; ++j) {
        lambda(j) = std::pow(0.5, j + 1);
    }
    s.covariance = space::make_covariance(lambda, space::SeededBasis{7});
    s.integrand.evaluator = Evaluator::Explicit;
    Matrix v(4, 6);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 6; ++c) {
            v(r, c) = std::cos(1.0 + r + 2.0 * c);
        }
    }
    s.integrand.values = {v};
    // columns of v are images of e_j^(λ); X e_j = √λ_j v_j, so the tail is T Σ_{j≥3} λ_j ‖v_j‖²
    double analytic = 0.0;
    for (int j = 3; j < 6; ++j) {
        analytic += lambda(j) * v.col(j).squaredNorm();
    }
    const auto r = truncation_report(s, 3, 20000, 8);
    CHECK(r.truncationBound.value() == doctest::Approx(analytic).epsilon(1e-12));
    CHECK(std::abs(r.lhs - analytic) <= 4.0 * r.se);
    CHECK(r.pass);
    // the sup over nodes dominates the terminal value path by path
    CHECK(r.supSurrogate.value() >= r.lhs);
}

TEST_CASE("faults are detected")
{
    const Scenario s = small_desk();
    for (Fault fault : {Fault::RightPoint, Fault::NonOrthogonalBasis}) {
        auto specs = default_checks(8192, 21);
        for (auto& c : specs) {
            c.fault = fault;
        }
        bool detected = false;
        for (const auto& r : run_suite(s, specs)) {
            CHECK(r.name.find("[" + to_string(fault) + "]") != std::string::npos);
            detected = detected || !r.pass;
        }
        CHECK(detected);
    }
}

TEST_CASE("every exact check catches right-point sampling")
{
    const Scenario s = small_desk();
    for (const auto& name : check_names()) {
        const CheckKind kind = parse_check(name);
        if (is_statistical(kind)) {
            continue;
        }
        CheckSpec c = spec_of(kind, 64);
        c.fault = Fault::RightPoint;
        INFO(name);
        CHECK_FALSE(run_check(s, c).pass);
    }
}

TEST_CASE("relative_deviation")
{
    const Vector a = Vector::Ones(3);
    CHECK(relative_deviation(a, a) == 0.0);
    CHECK(relative_deviation(Vector::Zero(2), Vector::Zero(2)) == 0.0);
    Vector b = a;
    b(0) += 1e-3;
    CHECK(relative_deviation(a, b) == doctest::Approx(1e-3 / b.norm()));
    CHECK(relative_deviation(a, b, 100.0) == doctest::Approx(1e-5));
}
