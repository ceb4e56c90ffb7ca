#pragma once

// Experiment scenarios: a covariance, a driver recipe and an integrand
// recipe, from which every check builds its per-path objects.

#include "itolevy/integrand.hpp"
#include "itolevy/process.hpp"
#include "itolevy/space.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace itolevy::verify {

using space::Matrix;
using space::Vector;

enum class IntegrandFamily { Simple, Grid };

enum class Evaluator {
    Zero,
    Constant,
    /// Bounded nonlinear functions of the path history.
    Feedback,
    /// Values listed in the scenario, one matrix per step.
    Explicit,
};

struct IntegrandSpec {
    IntegrandFamily family = IntegrandFamily::Grid;
    Evaluator evaluator = Evaluator::Feedback;
    std::uint64_t seed = 11;
    double scale = 1.0;
    std::vector<double> breakpoints;
    /// dH×J matrices whose column j is the image of e_j^(λ).
    std::vector<Matrix> values;
};

struct Scenario {
    space::SpaceConfig space;
    space::CovarianceSpec covariance;
    process::DriverSampler sampler;
    IntegrandSpec integrand;

    void validate() const;
};

/// dH=4, J=6, T=1, nScheduled=64, λ = (0.4, 0.3, 0.3, 0.15, 0.1, 0.05) in a
/// seeded eigenbasis, drivers cycling brownian / poisson(0.5) / mixed(√0.5, 1),
/// feedback grid integrand.
Scenario desk_scenario();

/// Integrand families of a scenario, one per layer. `variant` reseeds the
/// feedback coefficients so two distinct integrands can be drawn.
integrator::HIntegrand make_h_integrand(const Scenario& scenario, std::uint64_t variant = 0);
integrator::SeqIntegrand make_seq_integrand(const Scenario& scenario, std::uint64_t variant = 0);
/// The operator is fixed in reference coordinates of U, so it is the same
/// operator under every eigendecomposition; the HS columns are formed from
/// the covariance of the path being integrated.
integrator::OperatorIntegrand make_operator_integrand(const Scenario& scenario, std::uint64_t variant = 0);

/// Random simple integrands on scheduled nodes, for exactness tests.
struct RandomSimple {
    integrator::HIntegrand h;
    integrator::SeqIntegrand seq;
    integrator::OperatorIntegrand op;
};
RandomSimple random_simple_integrands(const Scenario& scenario, std::uint64_t seed, std::uint64_t sample);

} // namespace itolevy::verify
