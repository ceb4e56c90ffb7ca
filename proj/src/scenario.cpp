#include "itolevy/scenario.hpp"

#include "itolevy/error.hpp"
#include "itolevy/rng.hpp"

#include <algorithm>
#include <cmath>

namespace itolevy::verify {

using integrator::History;
using space::HSOperator;
using space::HVector;
using space::SeqH;

namespace {

struct FeedbackCoefficients {
    Matrix a0, a1, a2; // dH × J
    Vector u;          // unit vector of U
};

FeedbackCoefficients draw_coefficients(int dH, int J, std::uint64_t seed, std::uint64_t variant)
{
    CounterRng rng(seed, variant, static_cast<std::uint32_t>(dH * 4096 + J), StreamPurpose::Integrand);
    auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
        Matrix m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c) {
            for (Eigen::Index r = 0; r < rows; ++r) {
                m(r, c) = rng.normal();
            }
        }
        return m;
    };
    FeedbackCoefficients k;
    k.a0 = draw(dH, J);
    k.a1 = draw(dH, J);
    k.a2 = draw(dH, J) * 0.5;
    k.u = draw(J, 1).col(0);
    k.u /= k.u.norm();
    return k;
}

/// Explicit values expressed in the reference basis of U.
std::vector<Matrix> explicit_reference(const Scenario& scenario)
{
    std::vector<Matrix> out;
    for (const Matrix& m : scenario.integrand.values) {
        out.push_back(m * scenario.covariance.eigenbasis().transpose());
    }
    return out;
}

template <class V>
integrator::Integrand<V> wrap(const IntegrandSpec& spec, typename integrator::Integrand<V>::Evaluator f)
{
    if (spec.family == IntegrandFamily::Simple) {
        return integrator::Integrand<V>::simple(spec.breakpoints, std::move(f));
    }
    return integrator::Integrand<V>::grid(std::move(f));
}

/// Index of the step a History cut belongs to, for explicit simple values.
std::size_t step_index(const std::vector<double>& breakpoints, double t)
{
    const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t + 1e-12 * breakpoints.back());
    const auto i = static_cast<std::size_t>(it - breakpoints.begin());
    return std::min(i == 0 ? 0 : i - 1, breakpoints.size() - 2);
}

const Matrix& explicit_value(const std::vector<Matrix>& values, const IntegrandSpec& spec, const History& h)
{
    if (spec.family == IntegrandFamily::Grid) {
        return values.front();
    }
    return values[step_index(spec.breakpoints, h.time())];
}

} // namespace

void Scenario::validate() const
{
    space.validate();
    require(covariance.modes() == space.J, ErrorCode::DimensionMismatch, "covariance must have J modes");
    require(sampler.components() == static_cast<std::size_t>(space.J), ErrorCode::DimensionMismatch,
            "drivers must have J components");
    require(sampler.horizon == space.horizon, ErrorCode::DimensionMismatch, "driver horizon must equal T");
    const auto& in = integrand;
    if (in.family == IntegrandFamily::Simple) {
        require(in.breakpoints.size() >= 2 && in.breakpoints.front() == 0.0
                    && std::abs(in.breakpoints.back() - space.horizon) <= 1e-12 * space.horizon,
                ErrorCode::InvalidArgument, "simple integrand breakpoints must run from 0 to T");
    }
    if (in.evaluator == Evaluator::Explicit) {
        const std::size_t expected = in.family == IntegrandFamily::Simple ? in.breakpoints.size() - 1 : 1;
        require(in.values.size() == expected, ErrorCode::DimensionMismatch,
                "explicit integrand needs " + std::to_string(expected) + " value matrices");
        for (const Matrix& m : in.values) {
            require(m.rows() == space.dH && m.cols() == space.J, ErrorCode::DimensionMismatch,
                    "explicit integrand values must be dH x J");
        }
    }
}

Scenario desk_scenario()
{
    Scenario s;
    s.space = {4, 6, 1.0};
    Vector lambda(6);
    lambda << 0.4, 0.3, 0.3, 0.15, 0.1, 0.05;
    s.covariance = space::make_covariance(lambda, space::SeededBasis{7});
    s.sampler.horizon = 1.0;
    s.sampler.nScheduled = 64;
    s.sampler.specs = process::make_standard_specs(
        6, std::vector<process::Preset>{process::Preset::brownian(), process::Preset::poisson(0.5),
                                        process::Preset::mixed(std::sqrt(0.5), 1.0), process::Preset::brownian(),
                                        process::Preset::poisson(0.5), process::Preset::mixed(std::sqrt(0.5), 1.0)});
    s.integrand = {};
    return s;
}

integrator::HIntegrand make_h_integrand(const Scenario& scenario, std::uint64_t variant)
{
    const auto& spec = scenario.integrand;
    const int dH = scenario.space.dH;
    const double scale = spec.scale;
    switch (spec.evaluator) {
    case Evaluator::Zero:
        return wrap<HVector>(spec, [dH](const History&) { return HVector(HVector::Zero(dH)); });
    case Evaluator::Constant: {
        const auto k = draw_coefficients(dH, scenario.space.J, spec.seed, variant);
        HVector value = scale * k.a0.col(0);
        return wrap<HVector>(spec, [value](const History&) { return value; });
    }
    case Evaluator::Feedback: {
        const auto k = draw_coefficients(dH, scenario.space.J, spec.seed, variant);
        HVector h0 = scale * k.a0.col(0);
        HVector h1 = scale * k.a1.col(0);
        HVector h2 = scale * k.a2.col(0);
        return wrap<HVector>(spec, [h0, h1, h2](const History& h) {
            return HVector(h0 + h1 * std::sin(2.0 * h.driver(0)) + h2 * h.time());
        });
    }
    case Evaluator::Explicit: {
        auto values = spec.values;
        return wrap<HVector>(spec, [values, spec](const History& h) {
            return HVector(explicit_value(values, spec, h).col(0));
        });
    }
    }
    fail(ErrorCode::InvalidArgument, "unknown evaluator");
}

integrator::SeqIntegrand make_seq_integrand(const Scenario& scenario, std::uint64_t variant)
{
    const auto& spec = scenario.integrand;
    const int dH = scenario.space.dH;
    const int J = scenario.space.J;
    const double scale = spec.scale;
    switch (spec.evaluator) {
    case Evaluator::Zero:
        return wrap<SeqH>(spec, [dH, J](const History&) { return SeqH{Matrix::Zero(dH, J)}; });
    case Evaluator::Constant: {
        const auto k = draw_coefficients(dH, J, spec.seed, variant);
        SeqH value{scale * k.a0};
        return wrap<SeqH>(spec, [value](const History&) { return value; });
    }
    case Evaluator::Feedback: {
        const auto k = draw_coefficients(dH, J, spec.seed, variant);
        Matrix a0 = scale * k.a0;
        Matrix a1 = scale * k.a1;
        return wrap<SeqH>(spec, [a0, a1, J](const History& h) {
            SeqH x{a0};
            for (int j = 0; j < J; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                const double arg = 2.0 * h.driver(ju) + h.driver((ju + 1) % static_cast<std::size_t>(J));
                x.entries.col(j) += a1.col(j) * std::sin(arg);
            }
            return x;
        });
    }
    case Evaluator::Explicit: {
        auto values = spec.values;
        return wrap<SeqH>(spec, [values, spec](const History& h) { return SeqH{explicit_value(values, spec, h)}; });
    }
    }
    fail(ErrorCode::InvalidArgument, "unknown evaluator");
}

integrator::OperatorIntegrand make_operator_integrand(const Scenario& scenario, std::uint64_t variant)
{
    const auto& spec = scenario.integrand;
    const int dH = scenario.space.dH;
    const int J = scenario.space.J;
    const double scale = spec.scale;
    switch (spec.evaluator) {
    case Evaluator::Zero:
        return wrap<HSOperator>(spec, [dH, J](const History&) { return HSOperator{Matrix::Zero(dH, J)}; });
    case Evaluator::Constant: {
        const auto k = draw_coefficients(dH, J, spec.seed, variant);
        Matrix reference = scale * k.a0;
        return wrap<HSOperator>(spec, [reference](const History& h) {
            return space::restrict_reference_operator(h.spec(), reference);
        });
    }
    case Evaluator::Feedback: {
        const auto k = draw_coefficients(dH, J, spec.seed, variant);
        Matrix a0 = scale * k.a0;
        Matrix a1 = scale * k.a1;
        Matrix a2 = scale * k.a2;
        Vector u = k.u;
        return wrap<HSOperator>(spec, [a0, a1, a2, u](const History& h) {
            const double s = std::sin(3.0 * h.levy().dot(u));
            const Matrix reference = a0 + a1 * s + a2 * h.time();
            return space::restrict_reference_operator(h.spec(), reference);
        });
    }
    case Evaluator::Explicit: {
        auto values = explicit_reference(scenario);
        return wrap<HSOperator>(spec, [values, spec](const History& h) {
            return space::restrict_reference_operator(h.spec(), explicit_value(values, spec, h));
        });
    }
    }
    fail(ErrorCode::InvalidArgument, "unknown evaluator");
}

RandomSimple random_simple_integrands(const Scenario& scenario, std::uint64_t seed, std::uint64_t sample)
{
    const int n = scenario.sampler.explicitIncrements
        ? static_cast<int>(scenario.sampler.explicitIncrements->front().size())
        : scenario.sampler.nScheduled;
    const double T = scenario.space.horizon;
    CounterRng rng(seed, sample, 0, StreamPurpose::Check);

    // breakpoints: 0, a random set of interior scheduled nodes, T
    std::vector<double> breakpoints{0.0};
    const int interior = n > 1 ? static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(n - 1, 6)) + 1)) : 0;
    std::vector<int> picks;
    for (int i = 0; i < interior; ++i) {
        picks.push_back(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1))));
    }
    std::sort(picks.begin(), picks.end());
    picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
    for (int p : picks) {
        breakpoints.push_back(T * static_cast<double>(p) / static_cast<double>(n));
    }
    breakpoints.push_back(T);

    Scenario local = scenario;
    local.integrand.family = IntegrandFamily::Simple;
    local.integrand.evaluator = Evaluator::Feedback;
    local.integrand.seed = detail::splitmix64(seed ^ (sample * 0x9E3779B97F4A7C15ULL));
    local.integrand.breakpoints = breakpoints;
    local.integrand.values.clear();
    return {make_h_integrand(local), make_seq_integrand(local), make_operator_integrand(local)};
}

} // namespace itolevy::verify
