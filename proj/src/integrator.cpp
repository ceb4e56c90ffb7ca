#include "itolevy/integrator.hpp"

#include "itolevy/error.hpp"

#include <charconv>
#include <numeric>

namespace itolevy::integrator {

using process::LevyPath;
using process::SamplePath;

namespace {

IntegralPath empty_integral(const SamplePath& path, Eigen::Index dH)
{
    return {path.grid_ptr(), Matrix::Zero(dH, static_cast<Eigen::Index>(path.grid().nodes()))};
}

void check_cells(std::size_t cells, const SamplePath& path)
{
    require(cells == path.grid().cells(), ErrorCode::GridMismatch, "integrand sampled on a different grid");
}

std::vector<SeqH> psi_lambda_cells(const space::CovarianceSpec& spec, const std::vector<HSOperator>& cells)
{
    std::vector<SeqH> out;
    out.reserve(cells.size());
    for (const auto& s : cells) {
        out.push_back(space::psi_lambda_apply(spec, s));
    }
    return out;
}

std::vector<std::size_t> resolve_order(std::span<const std::size_t> order, std::size_t modes)
{
    std::vector<std::size_t> out(order.begin(), order.end());
    if (out.empty()) {
        out.resize(modes);
        std::iota(out.begin(), out.end(), std::size_t{0});
    }
    require(out.size() == modes, ErrorCode::DimensionMismatch, "summation order must list every mode");
    std::vector<bool> seen(modes, false);
    for (std::size_t j : out) {
        require(j < modes && !seen[j], ErrorCode::DimensionMismatch, "summation order is not a permutation");
        seen[j] = true;
    }
    return out;
}

template <class V, class SquaredNorm>
BracketPath energy_impl(std::span<const V> cells, const SamplePath& path, SquaredNorm squared)
{
    check_cells(cells.size(), path);
    const auto& times = path.grid().times;
    BracketPath out{path.grid_ptr(), std::vector<double>(times.size(), 0.0)};
    for (std::size_t k = 0; k < cells.size(); ++k) {
        out.values[k + 1] = out.values[k] + squared(cells[k]) * (times[k + 1] - times[k]);
    }
    return out;
}

} // namespace

std::string IntegralPath::to_csv() const
{
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(values.rows()));
    std::vector<std::span<const double>> columns;
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        names.push_back("I" + std::to_string(r + 1));
        auto& row = rows[static_cast<std::size_t>(r)];
        row.resize(static_cast<std::size_t>(values.cols()));
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            row[static_cast<std::size_t>(c)] = values(r, c);
        }
        columns.emplace_back(row);
    }
    return process::to_csv(*grid, names, columns);
}

IntegralPath operator+(const IntegralPath& a, const IntegralPath& b)
{
    require(a.values.rows() == b.values.rows() && a.values.cols() == b.values.cols(), ErrorCode::GridMismatch,
            "integral paths live on different grids");
    return {a.grid, a.values + b.values};
}

// ---------------------------------------------------------------------------

IntegralPath integrate_cells(std::span<const HVector> cells, const SamplePath& driver, std::size_t j)
{
    require(j < driver.components(), ErrorCode::IndexOutOfRange, "driver component out of range");
    check_cells(cells.size(), driver);
    const Eigen::Index dH = cells.empty() ? 0 : cells.front().size();
    IntegralPath out = empty_integral(driver, dH);
    const auto dm = driver.increments(j);
    for (std::size_t k = 0; k < cells.size(); ++k) {
        require(cells[k].size() == dH, ErrorCode::DimensionMismatch, "integrand changed dimension");
        const auto c = static_cast<Eigen::Index>(k);
        out.values.col(c + 1) = out.values.col(c) + cells[k] * dm[k];
    }
    return out;
}

IntegralPath integrate_cells(std::span<const SeqH> cells, const SamplePath& drivers,
                             std::span<const std::size_t> order)
{
    check_cells(cells.size(), drivers);
    const std::size_t modes = drivers.components();
    const auto sequence = resolve_order(order, modes);
    const Eigen::Index dH = cells.empty() ? 0 : cells.front().entries.rows();
    IntegralPath out = empty_integral(drivers, dH);
    HVector step(dH);
    for (std::size_t k = 0; k < cells.size(); ++k) {
        require(cells[k].entries.rows() == dH && static_cast<std::size_t>(cells[k].entries.cols()) == modes,
                ErrorCode::DimensionMismatch, "integrand entries do not match the driver modes");
        step.setZero();
        for (std::size_t j : sequence) {
            step += cells[k].entries.col(static_cast<Eigen::Index>(j)) * drivers.increment(j, k);
        }
        const auto c = static_cast<Eigen::Index>(k);
        out.values.col(c + 1) = out.values.col(c) + step;
    }
    return out;
}

IntegralPath integrate_column(std::span<const SeqH> cells, const SamplePath& drivers, std::size_t j)
{
    require(j < drivers.components(), ErrorCode::IndexOutOfRange, "mode index out of range");
    check_cells(cells.size(), drivers);
    const Eigen::Index dH = cells.empty() ? 0 : cells.front().entries.rows();
    IntegralPath out = empty_integral(drivers, dH);
    const auto dm = drivers.increments(j);
    const auto col = static_cast<Eigen::Index>(j);
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto c = static_cast<Eigen::Index>(k);
        out.values.col(c + 1) = out.values.col(c) + cells[k].entries.col(col) * dm[k];
    }
    return out;
}

process::SamplePath standard_components(const LevyPath& path)
{
    if (path.spec().identity_basis()) {
        return path.driver();
    }
    return process::project_driver(path, path.spec());
}

// ---------------------------------------------------------------------------

IntegralPath ito_h(const HIntegrand& x, const SamplePath& driver, std::size_t j)
{
    const auto cells = x.sample_cells(driver);
    return integrate_cells(cells, driver, j);
}

IntegralPath ito_h_in_basis(const HIntegrand& x, const SamplePath& driver, std::size_t j, const Matrix& basis)
{
    require(j < driver.components(), ErrorCode::IndexOutOfRange, "driver component out of range");
    const auto cells = x.sample_cells(driver);
    const Eigen::Index dH = cells.empty() ? basis.rows() : cells.front().size();
    require(basis.rows() == dH && basis.cols() == dH, ErrorCode::DimensionMismatch, "basis must be dH x dH");
    const auto dm = driver.increments(j);
    const auto nodes = static_cast<Eigen::Index>(driver.grid().nodes());

    // scalar integrals ⟨X, f_k⟩ • M, one row per basis vector
    Matrix scalar = Matrix::Zero(dH, nodes);
    for (Eigen::Index k = 0; k < dH; ++k) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto col = static_cast<Eigen::Index>(c);
            scalar(k, col + 1) = scalar(k, col) + basis.col(k).dot(cells[c]) * dm[c];
        }
    }
    IntegralPath out = empty_integral(driver, dH);
    for (Eigen::Index k = 0; k < dH; ++k) {
        out.values += basis.col(k) * scalar.row(k);
    }
    return out;
}

IntegralPath ito_seq(const SeqIntegrand& x, const SamplePath& drivers, std::span<const std::size_t> order)
{
    const auto cells = x.sample_cells(drivers);
    return integrate_cells(cells, drivers, order);
}

IntegralPath ito_l2lambda(const SeqIntegrand& x, const LevyPath& path)
{
    require(path.spec().identity_basis(), ErrorCode::SpecMismatch,
            "ito_l2lambda expects a path over the weighted sequence space");
    const auto cells = x.sample_cells(path.driver(), &path);
    // M^j = λ_j^{-1/2} ⟨L, g_j^(λ)⟩
    const SamplePath m = standard_components(path);
    return integrate_cells(cells, m);
}

IntegralPath ito_general(const OperatorIntegrand& x, const LevyPath& path)
{
    const auto& spec = path.spec();
    const auto operators = x.sample_cells(path.driver(), &path);
    for (const auto& s : operators) {
        require(s.columns.cols() == spec.modes(), ErrorCode::SpecMismatch,
                "integrand columns do not match the covariance modes");
    }
    const auto psi = psi_lambda_cells(spec, operators);
    const LevyPath image = process::transport_levy(path, space::phi_lambda_isometry(spec));
    const SamplePath m = standard_components(image);
    return integrate_cells(psi, m);
}

std::vector<IntegralPath> series_terms(const OperatorIntegrand& x, const LevyPath& path)
{
    const auto& spec = path.spec();
    const auto operators = x.sample_cells(path.driver(), &path);
    for (const auto& s : operators) {
        require(s.columns.cols() == spec.modes(), ErrorCode::SpecMismatch,
                "integrand columns do not match the covariance modes");
    }
    const auto xi = psi_lambda_cells(spec, operators);
    const SamplePath m = standard_components(path);
    std::vector<IntegralPath> terms;
    terms.reserve(static_cast<std::size_t>(spec.modes()));
    for (std::size_t j = 0; j < static_cast<std::size_t>(spec.modes()); ++j) {
        terms.push_back(integrate_column(xi, m, j));
    }
    return terms;
}

IntegralPath ito_general_series(const OperatorIntegrand& x, const LevyPath& path)
{
    auto terms = series_terms(x, path);
    IntegralPath total = terms.front();
    for (std::size_t j = 1; j < terms.size(); ++j) {
        total.values += terms[j].values;
    }
    return total;
}

// ---------------------------------------------------------------------------

HVector simple_sum_h(const HIntegrand& x, const SamplePath& driver, std::size_t j)
{
    require(j < driver.components(), ErrorCode::IndexOutOfRange, "driver component out of range");
    const auto steps = x.steps(driver);
    HVector total = HVector::Zero(steps.front().value.size());
    for (const auto& step : steps) {
        total += step.value * (driver.value(j, step.to) - driver.value(j, step.from));
    }
    return total;
}

HVector simple_sum_seq(const SeqIntegrand& x, const SamplePath& drivers)
{
    const auto steps = x.steps(drivers);
    HVector total = HVector::Zero(steps.front().value.entries.rows());
    for (const auto& step : steps) {
        require(static_cast<std::size_t>(step.value.modes()) == drivers.components(), ErrorCode::DimensionMismatch,
                "integrand entries do not match the driver modes");
        for (std::size_t j = 0; j < drivers.components(); ++j) {
            total += step.value.entries.col(static_cast<Eigen::Index>(j))
                * (drivers.value(j, step.to) - drivers.value(j, step.from));
        }
    }
    return total;
}

HVector simple_sum_general(const OperatorIntegrand& x, const LevyPath& path)
{
    const auto steps = x.steps(path.driver(), &path);
    HVector total = HVector::Zero(steps.front().value.columns.rows());
    for (const auto& step : steps) {
        const Vector du = path.value(step.to) - path.value(step.from);
        total += space::apply(path.spec(), step.value, du);
    }
    return total;
}

// ---------------------------------------------------------------------------

BracketPath angle_bracket(const process::TimeGrid& grid, std::shared_ptr<const process::TimeGrid> owner,
                          std::size_t j, std::size_t k)
{
    BracketPath out{std::move(owner), std::vector<double>(grid.nodes(), 0.0)};
    if (j == k) {
        out.values = grid.times;
    }
    return out;
}

BracketPath angle_bracket(const SamplePath& path, std::size_t j, std::size_t k)
{
    require(j < path.components() && k < path.components(), ErrorCode::IndexOutOfRange,
            "bracket index out of range");
    return angle_bracket(path.grid(), path.grid_ptr(), j, k);
}

BracketPath covariation_integral(const HIntegrand& x, const HIntegrand& y, const SamplePath& driver,
                                 std::size_t j, std::size_t k)
{
    require(j < driver.components() && k < driver.components(), ErrorCode::IndexOutOfRange,
            "bracket index out of range");
    const auto xs = x.sample_cells(driver);
    const auto ys = y.sample_cells(driver);
    check_cells(xs.size(), driver);
    check_cells(ys.size(), driver);
    const auto& times = driver.grid().times;
    BracketPath out{driver.grid_ptr(), std::vector<double>(times.size(), 0.0)};
    if (j != k) {
        return out;
    }
    for (std::size_t c = 0; c < xs.size(); ++c) {
        require(xs[c].size() == ys[c].size(), ErrorCode::DimensionMismatch, "integrands differ in dimension");
        out.values[c + 1] = out.values[c] + xs[c].dot(ys[c]) * (times[c + 1] - times[c]);
    }
    return out;
}

BracketPath energy(std::span<const HVector> cells, const SamplePath& path)
{
    return energy_impl(cells, path, [](const HVector& v) { return v.squaredNorm(); });
}

BracketPath energy(std::span<const SeqH> cells, const SamplePath& path)
{
    return energy_impl(cells, path, [](const SeqH& w) { return w.entries.squaredNorm(); });
}

BracketPath energy(std::span<const HSOperator> cells, const SamplePath& path)
{
    return energy_impl(cells, path, [](const HSOperator& s) {
        const double n = space::hs_norm(s);
        return n * n;
    });
}

BracketPath realized_covariation(const SamplePath& path, std::size_t j, std::size_t k)
{
    require(j < path.components() && k < path.components(), ErrorCode::IndexOutOfRange,
            "bracket index out of range");
    BracketPath out{path.grid_ptr(), std::vector<double>(path.grid().nodes(), 0.0)};
    for (std::size_t c = 0; c < path.grid().cells(); ++c) {
        out.values[c + 1] = out.values[c] + path.increment(j, c) * path.increment(k, c);
    }
    return out;
}

} // namespace itolevy::integrator
