#include "itolevy/verify.hpp"

#include "itolevy/error.hpp"
#include "itolevy/integrator.hpp"
#include "itolevy/rng.hpp"
#include "itolevy/stats.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace itolevy::verify {

using integrator::IntegralPath;
using process::LevyPath;
using process::SamplePath;
using space::HSOperator;
using space::HVector;
using space::SeqH;

namespace {

struct NamedKind {
    CheckKind kind;
    const char* name;
};

constexpr std::array<NamedKind, 13> kChecks{{
    {CheckKind::Isometry1, "isometry1"},
    {CheckKind::Isometry2, "isometry2"},
    {CheckKind::Isometry4, "isometry4"},
    {CheckKind::Orthogonality, "orthogonality"},
    {CheckKind::BasisInvariance, "basis_invariance"},
    {CheckKind::IsometryInvariance, "isometry_invariance"},
    {CheckKind::WellDefined, "well_defined"},
    {CheckKind::CovarianceRecovery, "covariance_recovery"},
    {CheckKind::Bracket, "bracket"},
    {CheckKind::Martingale, "martingale"},
    {CheckKind::SimpleExact, "simple_exact"},
    {CheckKind::SeriesOrthogonality, "series_orthogonality"},
    {CheckKind::TruncationTail, "truncation_tail"},
}};

/// Largest shear applied to the eigenbasis by the non-orthogonal fault.
constexpr double kBasisShear = 0.25;

/// Result of one statistical sub-test.
struct SubTest {
    double lhs = 0.0;
    double rhs = 0.0;
    double se = 0.0;
    double margin = 0.0;
};

double sigma_margin(double diff, double se)
{
    if (diff == 0.0) {
        return 0.0;
    }
    if (se == 0.0 || !std::isfinite(se)) {
        return std::numeric_limits<double>::infinity();
    }
    return std::abs(diff) / se;
}

/// Sub-test from three moments: lhs samples, rhs samples, paired difference.
SubTest paired(const Tally& tally, std::size_t first)
{
    const auto& lhs = tally.moments[first];
    const auto& rhs = tally.moments[first + 1];
    const auto& diff = tally.moments[first + 2];
    return {lhs.mean(), rhs.mean(), diff.se(), sigma_margin(diff.mean(), diff.se())};
}

/// Sub-test of E[sample] = target from a single moment.
SubTest against(const MomentAccumulator& m, double target)
{
    return {m.mean(), target, m.se(), sigma_margin(m.mean() - target, m.se())};
}

SubTest worst(const std::vector<SubTest>& tests)
{
    SubTest out = tests.front();
    for (const auto& t : tests) {
        if (std::isnan(t.margin) || t.margin > out.margin) {
            out = t;
        }
    }
    return out;
}

Report statistical_report(const CheckSpec& spec, const SubTest& t)
{
    Report r;
    r.lhs = t.lhs;
    r.rhs = t.rhs;
    r.se = t.se;
    r.margin = t.margin;
    r.pass = t.margin <= spec.sigmas;
    return r;
}

Report exact_report(const CheckSpec& spec, double lhs, double rhs, double maxDeviation)
{
    Report r;
    r.lhs = lhs;
    r.rhs = rhs;
    r.se = 0.0;
    r.margin = maxDeviation;
    r.pass = maxDeviation <= spec.relTol;
    return r;
}

/// Path-level objects shared by most checks.
struct PathContext {
    SamplePath driver;
    LevyPath levy;
};

PathContext make_path(const Scenario& scenario, std::uint64_t seed, std::uint64_t index)
{
    SamplePath driver = scenario.sampler.sample(seed, index);
    LevyPath levy(scenario.covariance, driver);
    return {std::move(driver), std::move(levy)};
}

/// Σ‖X_k‖·|ΔM_k|, the size of the terms being summed; used as the floor of
/// relative deviations so that cancellation cannot inflate them.
double term_scale(std::span<const HVector> cells, const SamplePath& driver, std::size_t j)
{
    double s = 0.0;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        s += cells[k].norm() * std::abs(driver.increment(j, k));
    }
    return s;
}

double term_scale(std::span<const SeqH> cells, const SamplePath& drivers)
{
    double s = 0.0;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        for (std::size_t j = 0; j < drivers.components(); ++j) {
            s += cells[k].entries.col(static_cast<Eigen::Index>(j)).norm() * std::abs(drivers.increment(j, k));
        }
    }
    return s;
}

double max_node_deviation(const IntegralPath& a, const IntegralPath& b, double scale)
{
    double worst = 0.0;
    for (Eigen::Index c = 0; c < a.values.cols(); ++c) {
        const double d = relative_deviation(a.values.col(c), b.values.col(c), scale);
        if (std::isnan(d) || d > worst) {
            worst = d;
        }
    }
    return worst;
}

std::size_t scheduled_node(const SamplePath& path, double fraction, int nScheduled)
{
    const double T = path.grid().horizon();
    const auto k = static_cast<int>(std::lround(fraction * nScheduled));
    return path.grid().node_of(T * static_cast<double>(k) / static_cast<double>(nScheduled));
}

int scheduled_count(const Scenario& scenario)
{
    return scenario.sampler.explicitIncrements
        ? static_cast<int>(scenario.sampler.explicitIncrements->front().size())
        : scenario.sampler.nScheduled;
}

std::vector<std::pair<int, int>> orthogonality_pairs(const CheckSpec& spec, int J)
{
    if (!spec.pairs.empty()) {
        return spec.pairs;
    }
    const std::vector<std::pair<int, int>> defaults{{0, 1}, {0, 2}, {1, 3}, {2, 4}, {3, 5}};
    std::vector<std::pair<int, int>> out;
    for (const auto& p : defaults) {
        if (p.second < J) {
            out.push_back(p);
        }
    }
    if (out.empty() && J >= 2) {
        out.push_back({0, 1});
    }
    return out;
}

/// Applies the right-point fault to an integrand when the check asks for it.
template <class V>
integrator::Integrand<V> sampled(integrator::Integrand<V> x, const CheckSpec& spec)
{
    if (spec.fault == Fault::RightPoint) {
        return x.with_sampling(integrator::Sampling::RightPointFault);
    }
    return x;
}

// --- statistical checks -------------------------------------------------------

Report check_isometry1(const Scenario& sc, const CheckSpec& spec, unsigned threads)
{
    const auto x = sampled(make_h_integrand(sc), spec);
    const Tally tally = reduce_paths(spec.nPaths, Tally(3, 0), threads, [&](std::size_t i, Tally& acc) {
        const SamplePath driver = sc.sampler.sample(spec.seed, i);
        const auto cells = x.sample_cells(driver);
        const double lhs = integrator::integrate_cells(cells, driver, 0).terminal().squaredNorm();
        const double rhs = integrator::energy(cells, driver).terminal();
        acc.moments[0].add(lhs);
        acc.moments[1].add(rhs);
        acc.moments[2].add(lhs - rhs);
    });
    return statistical_report(spec, paired(tally, 0));
}

Report check_isometry2(const Scenario& sc, const CheckSpec& spec, unsigned threads)
{
    const auto x = sampled(make_seq_integrand(sc), spec);
    const bool weighted = spec.variant == "l2lambda";
    const auto phi = space::phi_lambda_isometry(sc.covariance);
    const Tally tally = reduce_paths(spec.nPaths, Tally(3, 0), threads, [&](std::size_t i, Tally& acc) {
        const auto ctx = make_path(sc, spec.seed, i);
        const auto cells = x.sample_cells(ctx.driver);
        double lhs = 0.0;
        if (weighted) {
            const LevyPath image = process::transport_levy(ctx.levy, phi);
            lhs = integrator::ito_l2lambda(x, image).terminal().squaredNorm();
        } else {
            lhs = integrator::integrate_cells(cells, ctx.driver).terminal().squaredNorm();
        }
        const double rhs = integrator::energy(cells, ctx.driver).terminal();
        acc.moments[0].add(lhs);
        acc.moments[1].add(rhs);
        acc.moments[2].add(lhs - rhs);
    });
    return statistical_report(spec, paired(tally, 0));
}

Report check_isometry4(const Scenario& sc, const CheckSpec& spec, unsigned threads)
{
    const auto x = sampled(make_operator_integrand(sc), spec);
    const Tally tally = reduce_paths(spec.nPaths, Tally(3, 0), threads, [&](std::size_t i, Tally& acc) {
        const auto ctx = make_path(sc, spec.seed, i);
        const auto cells = x.sample_cells(ctx.driver, &ctx.levy);
        const double lhs = integrator::ito_general(x, ctx.levy).terminal().squaredNorm();
        const double rhs = integrator::energy(cells, ctx.driver).terminal();
        acc.moments[0].add(lhs);
        acc.moments[1].add(rhs);
        acc.moments[2].add(lhs - rhs);
    });
    return statistical_report(spec, paired(tally, 0));
}

Report check_orthogonality(const Scenario& sc, const CheckSpec& spec, unsigned threads)
{
    const auto x = sampled(make_operator_integrand(sc), spec);
    const auto pairs = orthogonality_pairs(spec, sc.space.J);
    const Tally tally = reduce_paths(spec.nPaths, Tally(pairs.size(), 0), threads, [&](std::size_t i, Tally& acc) {
        const auto ctx = make_path(sc, spec.seed, i);
        const auto terms = integrator::series_terms(x, ctx.levy);
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const auto& [j, k] = pairs[p];
            acc.moments[p].add(terms[static_cast<std::size_t>(j)].terminal().dot(
                terms[static_cast<std::size_t>(k)].terminal()));
        }
    });
    std::vector<SubTest> tests;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        tests.push_back(against(tally.moments[p], 0.0));
    }
    return statistical_report(spec, worst(tests));
}

Report check_covariance_recovery(const Scenario& sc, const CheckSpec& spec, unsigned threads)
{
    const int J = sc.space.J;
    const int n = scheduled_count(sc);
    const std::array<double, 3> fractions{0.25, 0.5, 1.0};
    std::vector<std::pair<int, int>> modes{{0, 0}};
    if (J >= 3) {
        modes.push_back({1, 2});
    } else if (J == 2) {
        modes.push_back({0, 1});
    }
    modes.push_back({J - 1, J - 1});
    const std::size_t nTests = modes.size() * fractions.size() * fractions.size();
    const auto& basis = sc.covariance.eigenbasis();

    const Tally tally = reduce_paths(spec.nPaths, Tally(nTests, 0), threads, [&](std::size_t i, Tally& acc) {
        const auto ctx = make_path(sc, spec.seed, i);
        std::array<Vector, 3> values;
        for (std::size_t f = 0; f < fractions.size(); ++f) {
            values[f] = ctx.levy.value(scheduled_node(ctx.driver, fractions[f], n));
        }
        std::size_t slot = 0;
        for (const auto& [a, b] : modes) {
            for (std::size_t ft = 0; ft < fractions.size(); ++ft) {
                for (std::size_t fs = 0; fs < fractions.size(); ++fs) {
                    acc.moments[slot++].add(values[ft].dot(basis.col(a)) * values[fs].dot(basis.col(b)));
                }
            }
        }
    });

    std::vector<SubTest> tests;
    std::size_t slot = 0;
    const double T = sc.space.horizon;
    for (const auto& [a, b] : modes) {
        for (double ft : fractions) {
            for (double fs : fractions) {
                const double t = T * std::lround(ft * n) / n;
                const double s = T * std::lround(fs * n) / n;
                const double target = a == b ? std::min(t, s) * sc.covariance.eigenvalues()(a) : 0.0;
                tests.push_back(against(tally.moments[slot++], target));
            }
        }
    }
    return statistical_report(spec, worst(tests));
}

Report check_bracket(const Scenario& sc, const CheckSpec& spec, unsigned threads)
{
    const bool drivers = spec.variant.empty() || spec.variant == "drivers";
    const bool covariation = spec.variant.empty() || spec.variant == "covariation";
    const std::size_t J = static_cast<std::size_t>(sc.space.J);
    const std::size_t nDriver = drivers ? J + J * (J - 1) / 2 + J : 0;
    // covariation: ‖X•M‖² vs ∫‖X‖², ⟨X•M, Y•M⟩ vs ∫⟨X,Y⟩, ⟨X•M^1, Y•M^2⟩ vs 0
    const bool cross = J >= 2;
    const std::size_t nCov = covariation ? 6 + (cross ? 1 : 0) : 0;
    const auto x = sampled(make_h_integrand(sc, 0), spec);
    const auto y = sampled(make_h_integrand(sc, 1), spec);
    const double T = sc.space.horizon;

    const Tally tally = reduce_paths(spec.nPaths, Tally(nDriver + nCov, 0), threads, [&](std::size_t i, Tally& acc) {
        const SamplePath driver = sc.sampler.sample(spec.seed, i);
        std::size_t slot = 0;
        if (drivers) {
            for (std::size_t j = 0; j < J; ++j) {
                const double m = driver.terminal(j);
                acc.moments[slot++].add(m * m);
            }
            for (std::size_t j = 0; j < J; ++j) {
                for (std::size_t k = j + 1; k < J; ++k) {
                    acc.moments[slot++].add(driver.terminal(j) * driver.terminal(k));
                }
            }
            for (std::size_t j = 0; j < J; ++j) {
                acc.moments[slot++].add(integrator::realized_covariation(driver, j, j).terminal());
            }
        }
        if (covariation) {
            const auto xc = x.sample_cells(driver);
            const auto yc = y.sample_cells(driver);
            const HVector ix = integrator::integrate_cells(xc, driver, 0).terminal();
            const HVector iy = integrator::integrate_cells(yc, driver, 0).terminal();
            const double qv = integrator::covariation_integral(x, x, driver, 0, 0).terminal();
            const double cv = integrator::covariation_integral(x, y, driver, 0, 0).terminal();
            acc.moments[slot].add(ix.squaredNorm());
            acc.moments[slot + 1].add(qv);
            acc.moments[slot + 2].add(ix.squaredNorm() - qv);
            acc.moments[slot + 3].add(ix.dot(iy));
            acc.moments[slot + 4].add(cv);
            acc.moments[slot + 5].add(ix.dot(iy) - cv);
            slot += 6;
            if (cross) {
                const HVector iy2 = integrator::integrate_cells(yc, driver, 1).terminal();
                acc.moments[slot++].add(ix.dot(iy2));
            }
        }
    });

    std::vector<SubTest> tests;
    std::size_t slot = 0;
    if (drivers) {
        for (std::size_t j = 0; j < J; ++j) {
            tests.push_back(against(tally.moments[slot++], T));
        }
        for (std::size_t j = 0; j < J; ++j) {
            for (std::size_t k = j + 1; k < J; ++k) {
                tests.push_back(against(tally.moments[slot++], 0.0));
            }
        }
        for (std::size_t j = 0; j < J; ++j) {
            tests.push_back(against(tally.moments[slot++], T));
        }
    }
    if (covariation) {
        tests.push_back(paired(tally, slot));
        tests.push_back(paired(tally, slot + 3));
        slot += 6;
        if (cross) {
            tests.push_back(against(tally.moments[slot++], 0.0));
        }
    }
    return statistical_report(spec, worst(tests));
}

Report check_martingale(const Scenario& sc, const CheckSpec& spec, unsigned threads)
{
    const auto x = sampled(make_operator_integrand(sc), spec);
    const std::size_t J = static_cast<std::size_t>(sc.space.J);
    const int n = scheduled_count(sc);
    const Vector direction = Vector::Ones(sc.space.dH) / std::sqrt(static_cast<double>(sc.space.dH));
    const std::size_t nIntegral = 3;
    const std::size_t nTests = nIntegral + 2 * J;

    const Tally tally = reduce_paths(spec.nPaths, Tally(nTests, 0), threads, [&](std::size_t i, Tally& acc) {
        const auto ctx = make_path(sc, spec.seed, i);
        const IntegralPath integral = integrator::ito_general(x, ctx.levy);
        const std::size_t mid = scheduled_node(ctx.driver, 0.5, n);
        const double future = (integral.terminal() - integral.at(mid)).dot(direction);
        // bounded functionals of the first half
        acc.moments[0].add(future);
        acc.moments[1].add(future * std::tanh(integral.at(mid).norm()));
        acc.moments[2].add(future * std::cos(ctx.driver.value(0, mid)));
        for (std::size_t j = 0; j < J; ++j) {
            acc.moments[nIntegral + 2 * j].add(ctx.driver.value(j, mid));
            acc.moments[nIntegral + 2 * j + 1].add(ctx.driver.terminal(j));
        }
    });
    std::vector<SubTest> tests;
    for (std::size_t t = 0; t < nTests; ++t) {
        tests.push_back(against(tally.moments[t], 0.0));
    }
    return statistical_report(spec, worst(tests));
}

Report check_series_orthogonality(const Scenario& sc, const CheckSpec& spec, unsigned threads)
{
    const auto x = sampled(make_operator_integrand(sc), spec);
    const Tally tally = reduce_paths(spec.nPaths, Tally(3, 1), threads, [&](std::size_t i, Tally& acc) {
        const auto ctx = make_path(sc, spec.seed, i);
        const auto terms = integrator::series_terms(x, ctx.levy);
        const IntegralPath general = integrator::ito_general(x, ctx.levy);
        IntegralPath total = terms.front();
        double termEnergy = 0.0;
        double scale = 0.0;
        for (std::size_t j = 0; j < terms.size(); ++j) {
            if (j > 0) {
                total.values += terms[j].values;
            }
            termEnergy += terms[j].terminal().squaredNorm();
            scale += terms[j].terminal().norm();
        }
        const double lhs = termEnergy;
        const double rhs = general.terminal().squaredNorm();
        acc.moments[0].add(lhs);
        acc.moments[1].add(rhs);
        acc.moments[2].add(lhs - rhs);
        acc.raise(0, max_node_deviation(total, general, scale));
    });
    Report r = statistical_report(spec, paired(tally, 0));
    r.pass = r.pass && tally.maxima[0] <= spec.relTol;
    return r;
}

Report check_truncation(const Scenario& sc, const CheckSpec& spec, unsigned threads)
{
    const auto x = sampled(make_operator_integrand(sc), spec);
    const auto jsub = static_cast<std::size_t>(spec.jsub);
    const Tally tally = reduce_paths(spec.nPaths, Tally(4, 0), threads, [&](std::size_t i, Tally& acc) {
        const auto ctx = make_path(sc, spec.seed, i);
        const auto cells = x.sample_cells(ctx.driver, &ctx.levy);
        const auto terms = integrator::series_terms(x, ctx.levy);
        Matrix rest = Matrix::Zero(sc.space.dH, static_cast<Eigen::Index>(ctx.driver.grid().nodes()));
        for (std::size_t j = jsub; j < terms.size(); ++j) {
            rest += terms[j].values;
        }
        const double deviation = rest.col(rest.cols() - 1).squaredNorm();
        double tail = 0.0;
        const auto& times = ctx.driver.grid().times;
        for (std::size_t k = 0; k < cells.size(); ++k) {
            double tailNorm = 0.0;
            for (std::size_t j = jsub; j < static_cast<std::size_t>(sc.space.J); ++j) {
                tailNorm += cells[k].columns.col(static_cast<Eigen::Index>(j)).squaredNorm();
            }
            tail += tailNorm * (times[k + 1] - times[k]);
        }
        acc.moments[0].add(deviation);
        acc.moments[1].add(tail);
        acc.moments[2].add(deviation - tail);
        acc.moments[3].add(rest.colwise().squaredNorm().maxCoeff());
    });
    Report r = statistical_report(spec, paired(tally, 0));
    r.truncationBound = tally.moments[1].mean();
    r.supSurrogate = tally.moments[3].mean();
    return r;
}

// --- exact checks -------------------------------------------------------------

Report check_simple_exact(const Scenario& sc, const CheckSpec& spec, unsigned threads)
{
    const bool fromScenario = sc.integrand.family == IntegrandFamily::Simple;
    // moments: route A norms, route B norms; maxima: worst relative deviation
    const Tally tally = reduce_paths(spec.nPaths, Tally(2, 1), threads, [&](std::size_t i, Tally& acc) {
        const auto ctx = make_path(sc, spec.seed, i);
        const RandomSimple x = fromScenario
            ? RandomSimple{make_h_integrand(sc), make_seq_integrand(sc), make_operator_integrand(sc)}
            : random_simple_integrands(sc, spec.seed, i);
        // closed forms use the left-point integrands; faults enter the integrator side
        const RandomSimple tested{sampled(x.h, spec), sampled(x.seq, spec), sampled(x.op, spec)};
        auto record = [&](const HVector& layered, const HVector& closed, double scale) {
            acc.moments[0].add(layered.norm());
            acc.moments[1].add(closed.norm());
            acc.raise(0, relative_deviation(layered, closed, scale));
        };

        const auto hCells = tested.h.sample_cells(ctx.driver);
        record(integrator::integrate_cells(hCells, ctx.driver, 0).terminal(),
               integrator::simple_sum_h(x.h, ctx.driver, 0), term_scale(hCells, ctx.driver, 0));

        const auto seqCells = tested.seq.sample_cells(ctx.driver);
        record(integrator::integrate_cells(seqCells, ctx.driver).terminal(),
               integrator::simple_sum_seq(x.seq, ctx.driver), term_scale(seqCells, ctx.driver));

        const auto opCells = x.op.sample_cells(ctx.driver, &ctx.levy);
        std::vector<SeqH> psi;
        for (const auto& s : opCells) {
            psi.push_back(space::psi_lambda_apply(sc.covariance, s));
        }
        record(integrator::ito_general(tested.op, ctx.levy).terminal(), integrator::simple_sum_general(x.op, ctx.levy),
               term_scale(psi, ctx.driver));
    });
    return exact_report(spec, tally.moments[0].mean(), tally.moments[1].mean(), tally.maxima[0]);
}

Report check_basis_invariance(const Scenario& sc, const CheckSpec& spec, unsigned threads)
{
    // the reference route stays left-point; faults enter the routes under test
    const auto x = make_h_integrand(sc);
    const auto tested = sampled(x, spec);
    std::vector<Matrix> rotations;
    for (int r = 0; r < spec.rotations; ++r) {
        rotations.push_back(space::random_orthogonal(sc.space.dH, detail::splitmix64(spec.seed + 1000003ULL * (r + 1))));
    }
    const Tally tally = reduce_paths(spec.nPaths, Tally(2, 1), threads, [&](std::size_t i, Tally& acc) {
        const SamplePath driver = sc.sampler.sample(spec.seed, i);
        const auto cells = x.sample_cells(driver);
        const auto testedCells = tested.sample_cells(driver);
        const IntegralPath reference = integrator::integrate_cells(cells, driver, 0);
        const double scale = term_scale(cells, driver, 0);
        acc.moments[0].add(reference.terminal().norm());
        for (const Matrix& rotation : rotations) {
            // explicit series over the rotated basis
            const IntegralPath series = integrator::ito_h_in_basis(tested, driver, 0, rotation);
            // conjugation: integrate O^T X in rotated coordinates and map back
            std::vector<HVector> rotated;
            rotated.reserve(testedCells.size());
            for (const auto& c : testedCells) {
                rotated.push_back(rotation.transpose() * c);
            }
            const HVector back = rotation * integrator::integrate_cells(rotated, driver, 0).terminal();
            acc.moments[1].add(back.norm());
            acc.raise(0, max_node_deviation(series, reference, scale));
            acc.raise(0, relative_deviation(back, reference.terminal(), scale));
        }
    });
    return exact_report(spec, tally.moments[0].mean(), tally.moments[1].mean(), tally.maxima[0]);
}

Report check_isometry_invariance(const Scenario& sc, const CheckSpec& spec, unsigned threads)
{
    const auto x = make_seq_integrand(sc);
    const auto tested = sampled(x, spec);
    const auto phi = space::phi_lambda_isometry(sc.covariance);
    const auto iso = space::random_eigen_isometry(phi.target, detail::splitmix64(spec.seed ^ 0x15A11CEULL));
    const Tally tally = reduce_paths(spec.nPaths, Tally(2, 1), threads, [&](std::size_t i, Tally& acc) {
        const auto ctx = make_path(sc, spec.seed, i);
        const LevyPath weighted = process::transport_levy(ctx.levy, phi);
        const IntegralPath direct = integrator::ito_l2lambda(tested, weighted);

        const auto cells = x.sample_cells(weighted.driver(), &weighted);
        std::vector<SeqH> mapped;
        mapped.reserve(cells.size());
        for (const auto& c : cells) {
            mapped.push_back(iso.apply_psi(c));
        }
        const LevyPath image = process::transport_levy(weighted, iso);
        const IntegralPath transported = integrator::integrate_cells(mapped, integrator::standard_components(image));

        acc.moments[0].add(direct.terminal().norm());
        acc.moments[1].add(transported.terminal().norm());
        acc.raise(0, max_node_deviation(direct, transported, term_scale(cells, weighted.driver())));
    });
    return exact_report(spec, tally.moments[0].mean(), tally.moments[1].mean(), tally.maxima[0]);
}

Report check_well_defined(const Scenario& sc, const CheckSpec& spec, unsigned threads)
{
    const auto x = make_operator_integrand(sc);
    const auto tested = sampled(x, spec);
    const auto iso = space::random_eigen_isometry(sc.covariance, detail::splitmix64(spec.seed ^ 0x3E11DEFULL));
    const space::CovarianceSpec alternate = space::equivalent_decomposition(iso);
    const Tally tally = reduce_paths(spec.nPaths, Tally(2, 1), threads, [&](std::size_t i, Tally& acc) {
        const auto ctx = make_path(sc, spec.seed, i);
        const IntegralPath first = integrator::ito_general(x, ctx.levy);
        const LevyPath other = process::reexpress(ctx.levy, alternate);
        const IntegralPath second = integrator::ito_general(tested, other);
        const IntegralPath series = integrator::ito_general_series(tested, ctx.levy);

        const auto cells = x.sample_cells(ctx.driver, &ctx.levy);
        std::vector<SeqH> psi;
        psi.reserve(cells.size());
        for (const auto& s : cells) {
            psi.push_back(space::psi_lambda_apply(sc.covariance, s));
        }
        const double scale = term_scale(psi, ctx.driver);
        acc.moments[0].add(first.terminal().norm());
        acc.moments[1].add(second.terminal().norm());
        acc.raise(0, max_node_deviation(first, second, scale));
        acc.raise(0, max_node_deviation(first, series, scale));
    });
    return exact_report(spec, tally.moments[0].mean(), tally.moments[1].mean(), tally.maxima[0]);
}

Report dispatch(const Scenario& sc, const CheckSpec& spec, unsigned threads)
{
    switch (spec.kind) {
    case CheckKind::Isometry1: return check_isometry1(sc, spec, threads);
    case CheckKind::Isometry2: return check_isometry2(sc, spec, threads);
    case CheckKind::Isometry4: return check_isometry4(sc, spec, threads);
    case CheckKind::Orthogonality: return check_orthogonality(sc, spec, threads);
    case CheckKind::BasisInvariance: return check_basis_invariance(sc, spec, threads);
    case CheckKind::IsometryInvariance: return check_isometry_invariance(sc, spec, threads);
    case CheckKind::WellDefined: return check_well_defined(sc, spec, threads);
    case CheckKind::CovarianceRecovery: return check_covariance_recovery(sc, spec, threads);
    case CheckKind::Bracket: return check_bracket(sc, spec, threads);
    case CheckKind::Martingale: return check_martingale(sc, spec, threads);
    case CheckKind::SimpleExact: return check_simple_exact(sc, spec, threads);
    case CheckKind::SeriesOrthogonality: return check_series_orthogonality(sc, spec, threads);
    case CheckKind::TruncationTail: return check_truncation(sc, spec, threads);
    }
    fail(ErrorCode::UnknownCheck, "unhandled check kind");
}

} // namespace

std::string to_string(CheckKind kind)
{
    for (const auto& c : kChecks) {
        if (c.kind == kind) {
            return c.name;
        }
    }
    return "unknown";
}

std::string to_string(Fault fault)
{
    switch (fault) {
    case Fault::None: return "none";
    case Fault::RightPoint: return "right_point";
    case Fault::NonOrthogonalBasis: return "non_orthogonal_basis";
    }
    return "unknown";
}

const std::vector<std::string>& check_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& c : kChecks) {
            out.emplace_back(c.name);
        }
        return out;
    }();
    return names;
}

CheckKind parse_check(const std::string& name)
{
    for (const auto& c : kChecks) {
        if (name == c.name) {
            return c.kind;
        }
    }
    std::string valid;
    for (const auto& n : check_names()) {
        valid += (valid.empty() ? "" : ", ") + n;
    }
    fail(ErrorCode::UnknownCheck, "unknown check '" + name + "'; valid checks: " + valid);
}

Fault parse_fault(const std::string& name)
{
    if (name == "none") {
        return Fault::None;
    }
    if (name == "right_point") {
        return Fault::RightPoint;
    }
    if (name == "non_orthogonal_basis") {
        return Fault::NonOrthogonalBasis;
    }
    fail(ErrorCode::ConfigInvalid, "unknown fault '" + name + "'; valid faults: right_point, non_orthogonal_basis");
}

bool is_statistical(CheckKind kind)
{
    switch (kind) {
    case CheckKind::SimpleExact:
    case CheckKind::BasisInvariance:
    case CheckKind::IsometryInvariance:
    case CheckKind::WellDefined:
        return false;
    default:
        return true;
    }
}

std::string CheckSpec::display_name() const
{
    std::string name = to_string(kind);
    if (!variant.empty()) {
        name += "/" + variant;
    }
    if (fault != Fault::None) {
        name += "[" + to_string(fault) + "]";
    }
    return name;
}

void CheckSpec::validate(const Scenario& scenario) const
{
    if (is_statistical(kind)) {
        require(nPaths >= 2, ErrorCode::ConfigInvalid,
                to_string(kind) + " is statistical and needs nPaths >= 2");
        require(!scenario.sampler.explicitIncrements, ErrorCode::ConfigInvalid,
                to_string(kind) + " is statistical and needs simulated drivers, not explicit increments");
    } else {
        require(nPaths >= 1, ErrorCode::ConfigInvalid, to_string(kind) + " needs nPaths >= 1");
    }
    require(relTol > 0.0 && sigmas > 0.0, ErrorCode::ConfigInvalid, "tolerances must be positive");
    if (kind == CheckKind::Isometry2) {
        require(variant.empty() || variant == "seq" || variant == "l2lambda", ErrorCode::ConfigInvalid,
                "isometry2 variant must be seq or l2lambda");
    } else if (kind == CheckKind::Bracket) {
        require(variant.empty() || variant == "drivers" || variant == "covariation", ErrorCode::ConfigInvalid,
                "bracket variant must be drivers or covariation");
    } else {
        require(variant.empty(), ErrorCode::ConfigInvalid, to_string(kind) + " has no variants");
    }
    if (kind == CheckKind::TruncationTail) {
        require(jsub >= 1 && jsub <= scenario.space.J, ErrorCode::IndexOutOfRange, "jsub must lie in [1, J]");
    }
    if (kind == CheckKind::Orthogonality) {
        const auto pairs = orthogonality_pairs(*this, scenario.space.J);
        require(!pairs.empty(), ErrorCode::ConfigInvalid, "orthogonality needs J >= 2");
        for (const auto& [j, k] : pairs) {
            require(j >= 0 && k >= 0 && j < scenario.space.J && k < scenario.space.J && j != k,
                    ErrorCode::ConfigInvalid, "orthogonality pairs must be distinct modes");
        }
    }
    if (kind == CheckKind::BasisInvariance) {
        require(rotations >= 1, ErrorCode::ConfigInvalid, "basis_invariance needs at least one rotation");
    }
}

double relative_deviation(const Vector& a, const Vector& b, double scale)
{
    const double diff = (a - b).norm();
    if (diff == 0.0) {
        return 0.0;
    }
    const double denom = std::max({a.norm(), b.norm(), scale});
    if (denom == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return diff / denom;
}

Scenario inject_fault(const Scenario& scenario, Fault fault)
{
    Scenario out = scenario;
    if (fault == Fault::NonOrthogonalBasis) {
        const int J = scenario.space.J;
        Matrix shear = Matrix::Identity(J, J);
        for (int r = 0; r < J; ++r) {
            for (int c = r + 1; c < J; ++c) {
                shear(r, c) = kBasisShear;
            }
        }
        if (J == 1) {
            shear(0, 0) = 1.0 + kBasisShear;
        }
        out.covariance = space::make_covariance_unchecked(scenario.covariance.eigenvalues(),
                                                          scenario.covariance.eigenbasis() * shear,
                                                          scenario.covariance.tail_mass());
    }
    return out;
}

Report run_check(const Scenario& scenario, const CheckSpec& spec, unsigned threads)
{
    const auto start = std::chrono::steady_clock::now();
    scenario.validate();
    spec.validate(scenario);
    Report report = dispatch(inject_fault(scenario, spec.fault), spec, threads);
    report.name = spec.display_name();
    report.nPaths = spec.nPaths;
    report.seed = spec.seed;
    report.wallTime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::vector<Report> run_suite(const Scenario& scenario, const std::vector<CheckSpec>& specs, unsigned threads)
{
    std::vector<Report> reports;
    reports.reserve(specs.size());
    for (const auto& spec : specs) {
        try {
            reports.push_back(run_check(scenario, spec, threads));
        } catch (const std::exception& e) {
            Report failed;
            failed.name = spec.display_name();
            const double nan = std::numeric_limits<double>::quiet_NaN();
            failed.lhs = failed.rhs = failed.se = failed.margin = nan;
            failed.pass = false;
            failed.nPaths = spec.nPaths;
            failed.seed = spec.seed;
            failed.error = e.what();
            reports.push_back(failed);
        }
    }
    return reports;
}

std::vector<CheckSpec> default_checks(std::uint64_t nPaths, std::uint64_t seed)
{
    std::vector<CheckSpec> specs;
    for (const auto& c : kChecks) {
        CheckSpec spec;
        spec.kind = c.kind;
        spec.nPaths = nPaths;
        spec.seed = seed;
        specs.push_back(spec);
    }
    return specs;
}

Report truncation_report(const Scenario& scenario, int jsub, std::uint64_t nPaths, std::uint64_t seed,
                         unsigned threads)
{
    CheckSpec spec;
    spec.kind = CheckKind::TruncationTail;
    spec.jsub = jsub;
    spec.nPaths = nPaths;
    spec.seed = seed;
    return run_check(scenario, spec, threads);
}

} // namespace itolevy::verify
