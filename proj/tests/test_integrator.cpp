#include "itolevy/error.hpp"
#include "itolevy/integrator.hpp"
#include "itolevy/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace itolevy;
using namespace itolevy::integrator;
using process::explicit_path;
using process::LevyPath;
using process::Preset;
using process::SamplePath;
using space::IdentityBasis;
using space::SeededBasis;

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

/// The 3.7071 worked case: dH=1, λ=(0.5,0.25), S e_1^(λ)=1, S e_2^(λ)=3.
struct WorkedCase {
    space::CovarianceSpec spec = space::make_covariance(vec({0.5, 0.25}), IdentityBasis{});
    SamplePath driver = explicit_path(1.0, {{1.0}, {2.0}});
    LevyPath levy{spec, driver};
    OperatorIntegrand x = OperatorIntegrand::constant(space::restrict_bounded_operator(spec, Matrix{{1.0, 3.0}}));
};

} // namespace

TEST_CASE("ito_h: simple integrand worked case")
{
    const auto driver = explicit_path(2.0, {{1.0, -0.5}});
    const auto x = HIntegrand::simple({0.0, 1.0, 2.0}, [](const History& h) {
        return h.time() < 0.5 ? vec({1.0, 0.0}) : vec({0.0, 2.0});
    });
    const auto path = ito_h(x, driver, 0);
    CHECK(path.terminal() == vec({1.0, -1.0}));
    CHECK(path.at(1) == vec({1.0, 0.0}));
    CHECK(simple_sum_h(x, driver, 0) == vec({1.0, -1.0}));
}

TEST_CASE("ito_h: zero integrand or zero driver")
{
    const auto driver = explicit_path(1.0, {{0.3, -0.2, 0.9}});
    CHECK(ito_h(HIntegrand::constant(Vector::Zero(3)), driver, 0).values.isZero(0.0));
    const auto flat = explicit_path(1.0, {{0.0, 0.0, 0.0}});
    CHECK(ito_h(HIntegrand::constant(vec({1.0, 2.0})), flat, 0).values.isZero(0.0));
}

TEST_CASE("integrands cannot look ahead")
{
    const auto driver = explicit_path(1.0, {{0.3, -0.2}});
    const auto cheat = HIntegrand::grid([](const History& h) { return vec({h.driver_at(0, h.node() + 1)}); });
    try {
        ito_h(cheat, driver, 0);
        FAIL("expected IndexOutOfRange");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IndexOutOfRange);
    }
}

TEST_CASE("ito_seq: two-term worked case")
{
    const auto drivers = explicit_path(1.0, {{0.3}, {-0.1}});
    Matrix entries{{1.0, 2.0}};
    const auto x = SeqIntegrand::constant(SeqH{entries});
    CHECK(ito_seq(x, drivers).terminal()(0) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("ito_seq: single nonzero entry reduces to ito_h")
{
    const auto specs = process::make_standard_specs(3, std::vector<Preset>{Preset::mixed(std::sqrt(0.5), 1.0)});
    const auto drivers = process::simulate_paths(specs, 1.0, 32, 3, 1);
    const auto xh = HIntegrand::grid([](const History& h) { return vec({std::sin(h.driver(1)), h.time()}); });
    const auto xs = SeqIntegrand::grid([&](const History& h) {
        SeqH w{Matrix::Zero(2, 3)};
        w.entries.col(1) = xh.evaluate(h);
        return w;
    });
    const auto a = ito_seq(xs, drivers);
    const auto b = ito_h(xh, drivers, 1);
    CHECK((a.values - b.values).norm() <= 1e-14 * std::max(1.0, b.values.norm()));
}

TEST_CASE("ito_seq: summation order does not matter")
{
    const auto specs = process::make_standard_specs(6, std::vector<Preset>{Preset::poisson(0.5)});
    const auto drivers = process::simulate_paths(specs, 1.0, 32, 8, 2);
    const auto x = SeqIntegrand::grid([](const History& h) {
        SeqH w{Matrix(3, 6)};
        for (int j = 0; j < 6; ++j) {
            w.entries.col(j) = vec({std::cos(h.driver(static_cast<std::size_t>(j))), 1.0 + j, h.time() * j});
        }
        return w;
    });
    const auto reference = ito_seq(x, drivers);
    std::vector<std::size_t> order(6);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937 gen(5);
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(order.begin(), order.end(), gen);
        const auto permuted = ito_seq(x, drivers, order);
        CHECK((permuted.terminal() - reference.terminal()).norm() <= 1e-12 * reference.terminal().norm());
    }
}

TEST_CASE("ito_l2lambda matches ito_seq")
{
    const auto spec = space::make_covariance(vec({0.5, 0.25}), IdentityBasis{});
    const auto drivers = explicit_path(1.0, {{0.3}, {-0.1}});
    const auto x = SeqIntegrand::constant(SeqH{Matrix{{1.0, 2.0}}});
    const LevyPath path(spec, drivers);
    const auto a = ito_l2lambda(x, path);
    const auto b = ito_seq(x, drivers);
    CHECK(a.values == b.values);
    CHECK(std::abs(a.terminal()(0) - 0.1) <= 1e-12);
    CHECK(ito_l2lambda(SeqIntegrand::constant(SeqH{Matrix::Zero(1, 2)}), path).values.isZero(0.0));

    const auto rotated = space::make_covariance(vec({0.5, 0.25}), SeededBasis{3});
    CHECK_THROWS_AS(ito_l2lambda(x, LevyPath(rotated, drivers)), Error);
}

TEST_CASE("ito_general: the two-mode worked case")
{
    WorkedCase w;
    const double expected = std::sqrt(0.5) * 1.0 + std::sqrt(0.25) * 2.0 * 3.0;
    CHECK(std::abs(ito_general(w.x, w.levy).terminal()(0) - expected) <= 1e-12 * expected);
    CHECK(std::abs(ito_general_series(w.x, w.levy).terminal()(0) - expected) <= 1e-12 * expected);
    const auto terms = series_terms(w.x, w.levy);
    REQUIRE(terms.size() == 2);
    CHECK(terms[0].terminal()(0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    CHECK(terms[1].terminal()(0) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("ito_general: zero and constant integrands")
{
    const auto spec = space::make_covariance(vec({0.4, 0.3, 0.3, 0.15}), SeededBasis{4});
    const auto specs = process::make_standard_specs(4, std::vector<Preset>{Preset::mixed(std::sqrt(0.5), 1.0)});
    const LevyPath path(spec, process::simulate_paths(specs, 1.0, 16, 2, 0));

    const auto zero = OperatorIntegrand::constant(HSOperator{Matrix::Zero(2, 4)});
    CHECK(ito_general(zero, path).values.isZero(0.0));

    // a constant operator A on U integrates to A(L_T)
    Matrix a(2, 4);
    a << 1.0, -2.0, 0.5, 3.0, 0.0, 1.5, -1.0, 2.0;
    const auto x = OperatorIntegrand::grid(
        [a](const History& h) { return space::restrict_reference_operator(h.spec(), a); });
    const Vector expected = a * path.terminal();
    CHECK((ito_general(x, path).terminal() - expected).norm() <= 1e-12 * expected.norm());
}

TEST_CASE("series_terms: rank-one integrand excites one term")
{
    const auto spec = space::make_covariance(vec({0.5, 0.3, 0.2}), IdentityBasis{});
    const auto specs = process::make_standard_specs(3, std::vector<Preset>{Preset::brownian()});
    const LevyPath path(spec, process::simulate_paths(specs, 1.0, 16, 1, 0));
    Matrix cols = Matrix::Zero(2, 3);
    cols.col(0) = vec({0.6, 0.8});
    const auto terms = series_terms(OperatorIntegrand::constant(HSOperator{cols}), path);
    CHECK_FALSE(terms[0].values.isZero(0.0));
    CHECK(terms[1].values.isZero(0.0));
    CHECK(terms[2].values.isZero(0.0));
}

TEST_CASE("series terms are orthogonal in mean")
{
    const auto spec = space::make_covariance(vec({0.4, 0.3, 0.3}), SeededBasis{6});
    const auto specs = process::make_standard_specs(3, std::vector<Preset>{Preset::poisson(0.5)});
    const auto x = OperatorIntegrand::grid([](const History& h) {
        Matrix a(2, 3);
        const double s = std::sin(h.levy().sum());
        a << 1.0 + s, 0.5, -1.0, s, 2.0, 0.3;
        return space::restrict_reference_operator(h.spec(), a);
    });
    MomentAccumulator diff;
    for (std::size_t i = 0; i < 100000; ++i) {
        const LevyPath path(spec, process::simulate_paths(specs, 1.0, 8, 31, i));
        const auto terms = series_terms(x, path);
        double sum = 0.0;
        for (const auto& t : terms) {
            sum += t.terminal().squaredNorm();
        }
        diff.add(sum - ito_general(x, path).terminal().squaredNorm());
    }
    CHECK(std::abs(diff.mean()) <= 4.0 * diff.se());
}

TEST_CASE("angle_bracket")
{
    const auto specs = process::make_standard_specs(2, std::vector<Preset>{Preset::poisson(0.5)});
    const auto path = process::simulate_paths(specs, 1.0, 8, 4, 0);
    const auto diag = angle_bracket(path, 0, 0);
    for (std::size_t n = 0; n < path.grid().nodes(); ++n) {
        CHECK(diag.values[n] == path.grid().times[n]);
    }
    for (double v : angle_bracket(path, 0, 1).values) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("product of distinct drivers minus bracket is centred")
{
    const auto specs = process::make_standard_specs(2, std::vector<Preset>{Preset::mixed(std::sqrt(0.5), 1.0)});
    MomentAccumulator acc;
    for (std::size_t i = 0; i < 100000; ++i) {
        const auto path = process::simulate_paths(specs, 1.0, 4, 12, i);
        acc.add(path.terminal(0) * path.terminal(1) - angle_bracket(path, 0, 1).terminal());
    }
    CHECK(std::abs(acc.mean()) <= 4.0 * acc.se());
}

TEST_CASE("covariation_integral")
{
    const auto specs = process::make_standard_specs(2, std::vector<Preset>{Preset::brownian()});
    const auto path = process::simulate_paths(specs, 1.0, 16, 4, 0);
    const auto x = HIntegrand::grid([](const History& h) { return vec({std::cos(h.driver(0)), h.time()}); });
    const auto y = HIntegrand::constant(vec({0.0, 1.0}));

    for (double v : covariation_integral(x, x, path, 0, 1).values) {
        CHECK(v == 0.0);
    }
    // left-point quadrature of ‖X‖² against dt
    const auto& t = path.grid().times;
    double expected = 0.0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        const double c = std::cos(path.value(0, k));
        expected += (c * c + t[k] * t[k]) * (t[k + 1] - t[k]);
    }
    CHECK(covariation_integral(x, x, path, 0, 0).terminal() == doctest::Approx(expected).epsilon(1e-13));

    const auto e1 = HIntegrand::constant(vec({1.0, 0.0}));
    for (double v : covariation_integral(e1, y, path, 0, 0).values) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("simple closed forms match the layered integrals")
{
    const auto spec = space::make_covariance(vec({0.4, 0.3, 0.3}), SeededBasis{8});
    const auto specs = process::make_standard_specs(3, std::vector<Preset>{Preset::poisson(0.5)});
    const auto driver = process::simulate_paths(specs, 1.0, 8, 6, 0);
    const LevyPath path(spec, driver);
    const std::vector<double> breaks{0.0, 0.25, 0.625, 1.0};

    const auto xs = SeqIntegrand::simple(breaks, [](const History& h) {
        Matrix e(2, 3);
        e << h.driver(0), 1.0, -h.time(), 2.0, h.driver(2), 0.5;
        return SeqH{e};
    });
    const Vector a = ito_seq(xs, driver).terminal();
    CHECK((a - simple_sum_seq(xs, driver)).norm() <= 1e-12 * std::max(1.0, a.norm()));

    const auto xo = OperatorIntegrand::simple(breaks, [](const History& h) {
        Matrix r(2, 3);
        r << 1.0, h.levy()(0), 0.0, -1.0, 2.0, h.levy()(2);
        return space::restrict_reference_operator(h.spec(), r);
    });
    const Vector b = ito_general(xo, path).terminal();
    CHECK((b - simple_sum_general(xo, path)).norm() <= 1e-12 * std::max(1.0, b.norm()));
}

TEST_CASE("basis-dependent route agrees under rotation of H")
{
    const auto specs = process::make_standard_specs(1, std::vector<Preset>{Preset::mixed(std::sqrt(0.5), 1.0)});
    const auto driver = process::simulate_paths(specs, 1.0, 32, 2, 9);
    const auto x = HIntegrand::grid([](const History& h) { return vec({std::sin(h.driver(0)), 1.0, h.time()}); });
    const auto reference = ito_h(x, driver, 0);
    const auto rotated = ito_h_in_basis(x, driver, 0, space::random_orthogonal(3, 4));
    CHECK((reference.terminal() - rotated.terminal()).norm() <= 1e-12 * std::max(1.0, reference.terminal().norm()));
}

TEST_CASE("integral path dump")
{
    WorkedCase w;
    const auto csv = ito_general(w.x, w.levy).to_csv();
    CHECK(csv.rfind("time,kind,I1\n0,scheduled,0\n1,scheduled,3.70710678118654", 0) == 0);
}
