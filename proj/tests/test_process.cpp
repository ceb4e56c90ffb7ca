#include "itolevy/error.hpp"
#include "itolevy/process.hpp"
#include "itolevy/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace itolevy;
using namespace itolevy::process;
using space::IdentityBasis;
using space::Matrix;
using space::SeededBasis;
using space::Vector;

namespace {

Vector vec(std::initializer_list<double> xs)
{
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) {
        v(i++) = x;
    }
    return v;
}

/// Mean and standard error of f over n independent simulated paths.
template <class F>
std::pair<double, double> monte_carlo(const std::vector<StandardLevySpec>& specs, std::size_t n, F f)
{
    MomentAccumulator acc;
    for (std::size_t i = 0; i < n; ++i) {
        acc.add(f(simulate_paths(specs, 1.0, 16, 4242, i)));
    }
    return {acc.mean(), acc.se()};
}

} // namespace

TEST_CASE("presets normalize the bracket")
{
    const auto b = from_preset(Preset::brownian());
    CHECK(b.sigma == 1.0);
    CHECK(b.jumps.empty());

    const auto p = from_preset(Preset::poisson(0.5));
    CHECK(p.sigma == 0.0);
    REQUIRE(p.jumps.size() == 1);
    CHECK(p.jumps[0].size == 0.5);
    CHECK(p.jumps[0].intensity == doctest::Approx(4.0).epsilon(1e-15));

    const auto m = from_preset(Preset::mixed(std::sqrt(0.5), 1.0));
    CHECK(m.sigma == doctest::Approx(std::sqrt(0.5)));
    REQUIRE(m.jumps.size() == 1);
    CHECK(m.jumps[0].size == 1.0);
    CHECK(m.jumps[0].intensity == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.bracket_rate() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("make_standard_specs validates normalization")
{
    CHECK(make_standard_specs(3, std::vector<Preset>{Preset::brownian()}).size() == 3);
    CHECK_THROWS_AS(make_standard_specs(3, std::vector<Preset>{Preset::brownian(), Preset::brownian()}), Error);
    StandardLevySpec bad;
    bad.sigma = 0.9;
    try {
        make_standard_specs(1, std::vector<StandardLevySpec>{bad});
        FAIL("expected NonNormalizable");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonNormalizable);
    }
    StandardLevySpec zero;
    zero.sigma = 0.0;
    zero.jumps = {{0.0, 1.0}};
    try {
        make_standard_specs(1, std::vector<StandardLevySpec>{zero});
        FAIL("expected ZeroJumpSize");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ZeroJumpSize);
    }
}

TEST_CASE("simulate_paths is deterministic per (seed, pathIndex)")
{
    const auto specs = make_standard_specs(2, std::vector<Preset>{Preset::brownian(), Preset::poisson(0.5)});
    const auto a = simulate_paths(specs, 1.0, 32, 9, 17);
    const auto b = simulate_paths(specs, 1.0, 32, 9, 17);
    const auto c = simulate_paths(specs, 1.0, 32, 9, 18);
    REQUIRE(a.grid().times == b.grid().times);
    for (std::size_t j = 0; j < 2; ++j) {
        const auto ia = a.increments(j);
        const auto ib = b.increments(j);
        CHECK(std::equal(ia.begin(), ia.end(), ib.begin()));
    }
    CHECK(a.terminal(0) != c.terminal(0));
}

TEST_CASE("simulated grid contains scheduled nodes and jump times")
{
    const auto specs = make_standard_specs(1, std::vector<Preset>{Preset::poisson(0.5)});
    const auto path = simulate_paths(specs, 1.0, 8, 1, 3);
    std::size_t jumps = 0;
    for (const auto& log : path.jump_log()) {
        jumps += log.size();
    }
    std::size_t jumpNodes = 0;
    for (auto kind : path.grid().kinds) {
        jumpNodes += kind == NodeKind::Jump ? 1 : 0;
    }
    CHECK(jumpNodes == jumps);
    CHECK(path.grid().nodes() == 9 + jumps);
    for (int k = 0; k <= 8; ++k) {
        CHECK(path.grid().find(k / 8.0).has_value());
    }
    // the cumulative value equals jumps minus compensator at T
    const double expected = 0.5 * static_cast<double>(jumps) - 0.5 * 4.0 * 1.0;
    CHECK(path.terminal(0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("compensated poisson driver has zero mean")
{
    const auto specs = make_standard_specs(1, std::vector<Preset>{Preset::poisson(0.5)});
    const auto [mean, se] = monte_carlo(specs, 100000, [](const SamplePath& p) { return p.terminal(0); });
    CHECK(std::abs(mean) <= 4.0 * se);
}

TEST_CASE("driver variance at T equals T for every preset")
{
    for (const auto& preset : {Preset::brownian(), Preset::poisson(0.5), Preset::mixed(std::sqrt(0.5), 1.0)}) {
        const auto specs = make_standard_specs(1, std::vector<Preset>{preset});
        // E[M_T] = 0 is known, so the variance is the second moment
        const auto [mean, se] = monte_carlo(specs, 100000, [](const SamplePath& p) { return p.terminal(0) * p.terminal(0); });
        CHECK(std::abs(mean - 1.0) <= 4.0 * se);
    }
}

TEST_CASE("assemble_levy: hand evaluation")
{
    const auto one = space::make_covariance(vec({1.0}), IdentityBasis{});
    const auto p1 = explicit_path(1.0, {{0.3, -0.7}});
    const LevyPath l1(one, p1);
    CHECK(l1.value(1)(0) == 0.3);
    CHECK(l1.terminal()(0) == doctest::Approx(-0.4));

    const auto spec = space::make_covariance(vec({0.5, 0.25}), IdentityBasis{});
    const auto driver = explicit_path(1.0, {{1.0}, {2.0}});
    const LevyPath l = assemble_levy(spec, driver);
    CHECK(l.terminal()(0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    CHECK(l.terminal()(1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("project_standard round trips")
{
    const auto specs = make_standard_specs(3, std::vector<Preset>{Preset::mixed(std::sqrt(0.5), 1.0)});
    const auto driver = simulate_paths(specs, 1.0, 16, 5, 0);

    const auto identity = space::make_covariance(vec({0.5, 0.3, 0.2}), IdentityBasis{});
    const LevyPath li(identity, driver);
    for (std::size_t j = 0; j < 3; ++j) {
        const auto back = project_standard(li, j);
        const auto orig = driver.values(j);
        CHECK(std::equal(back.begin(), back.end(), orig.begin()));
    }

    const auto rotated = space::make_covariance(vec({0.5, 0.3, 0.2}), SeededBasis{11});
    const LevyPath lr(rotated, driver);
    for (std::size_t j = 0; j < 3; ++j) {
        const auto back = project_standard(lr, j);
        for (std::size_t n = 0; n < back.size(); ++n) {
            CHECK(std::abs(back[n] - driver.value(j, n)) <= 1e-12 * std::max(1.0, std::abs(driver.value(j, n))));
        }
    }
    const auto zero = explicit_path(1.0, {{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}});
    const auto proj = project_standard(LevyPath(rotated, zero), 1);
    for (double v : proj) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("empirical_covariance")
{
    const auto spec = space::make_covariance(vec({0.5, 0.25}), SeededBasis{2});
    DriverSampler sampler;
    sampler.specs = make_standard_specs(2, std::vector<Preset>{Preset::brownian(), Preset::poisson(0.5)});
    sampler.horizon = 1.0;
    sampler.nScheduled = 8;
    const Vector e1 = spec.eigenbasis().col(0);
    const Vector e2 = spec.eigenbasis().col(1);

    const auto same = empirical_covariance(spec, sampler, e1, e1, 1.0, 1.0, 100000, 77);
    CHECK(std::abs(same.estimate - 0.5) <= 4.0 * same.se);

    const auto mixed = empirical_covariance(spec, sampler, e1, e1, 0.3, 0.7, 100000, 78);
    CHECK(std::abs(mixed.estimate - 0.3 * 0.5) <= 4.0 * mixed.se);

    const Vector u = (e1 + e2) / std::sqrt(2.0);
    const auto diag = empirical_covariance(spec, sampler, u, u, 1.0, 1.0, 100000, 79);
    CHECK(std::abs(diag.estimate - 0.375) <= 4.0 * diag.se);

    const auto origin = empirical_covariance(spec, sampler, e1, e2, 0.0, 0.5, 10, 80);
    CHECK(origin.estimate == 0.0);
    CHECK(origin.se == 0.0);
}

TEST_CASE("transport_levy")
{
    const auto twin = space::make_covariance(vec({0.5, 0.5}), IdentityBasis{});
    const auto driver = explicit_path(1.0, {{0.2, 0.4}, {-1.0, 0.5}});
    const LevyPath path(twin, driver);

    const auto same = transport_levy(path, space::phi_lambda_isometry(twin));
    for (std::size_t n = 0; n < driver.grid().nodes(); ++n) {
        CHECK(same.value(n) == path.value(n));
    }

    const auto swapped = transport_levy(path, space::build_eigen_isometry(twin, std::vector<std::size_t>{1, 0}));
    for (std::size_t n = 0; n < driver.grid().nodes(); ++n) {
        CHECK(swapped.driver().value(0, n) == driver.value(1, n));
        CHECK(swapped.driver().value(1, n) == driver.value(0, n));
    }

    const auto spec = space::make_covariance(vec({0.4, 0.3, 0.3}), SeededBasis{5});
    const auto specs = make_standard_specs(3, std::vector<Preset>{Preset::brownian()});
    const LevyPath rotated(spec, simulate_paths(specs, 1.0, 8, 3, 0));
    const auto phi = space::phi_lambda_isometry(spec);
    const auto moved = transport_levy(transport_levy(rotated, phi), space::random_eigen_isometry(phi.target, 12));
    CHECK(std::abs(moved.terminal().norm() - rotated.terminal().norm()) <= 1e-12 * rotated.terminal().norm());

    CHECK_THROWS_AS(transport_levy(rotated, space::phi_lambda_isometry(twin)), Error);
}

TEST_CASE("path dump schema")
{
    const auto path = explicit_path(2.0, {{1.0, -0.5}});
    CHECK(to_csv(path) == "time,kind,M1\n0,scheduled,0\n1,scheduled,1\n2,scheduled,0.5\n");
}
