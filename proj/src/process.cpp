#include "itolevy/process.hpp"

#include "itolevy/error.hpp"
#include "itolevy/format.hpp"
#include "itolevy/rng.hpp"
#include "itolevy/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace itolevy::process {

namespace {

constexpr double kNormalizationTolerance = 1e-12;

} // namespace

double StandardLevySpec::bracket_rate() const
{
    double rate = sigma * sigma;
    for (const Jump& jump : jumps) {
        rate += jump.size * jump.size * jump.intensity;
    }
    return rate;
}

void StandardLevySpec::validate() const
{
    require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::InvalidArgument, "sigma must be nonnegative");
    for (const Jump& jump : jumps) {
        require(jump.size != 0.0 && std::isfinite(jump.size), ErrorCode::ZeroJumpSize,
                "jump sizes must be nonzero");
        require(jump.intensity > 0.0 && std::isfinite(jump.intensity), ErrorCode::InvalidArgument,
                "jump intensities must be positive");
    }
    require(std::abs(bracket_rate() - 1.0) <= kNormalizationTolerance, ErrorCode::NonNormalizable,
            "sigma^2 + sum a^2 nu = " + format_double(bracket_rate()) + ", expected 1");
}

StandardLevySpec from_preset(const Preset& preset)
{
    switch (preset.kind) {
    case Preset::Kind::Brownian:
        return {1.0, {}};
    case Preset::Kind::Poisson:
        require(preset.a != 0.0 && std::isfinite(preset.a), ErrorCode::ZeroJumpSize,
                "poisson preset needs a nonzero jump size");
        return {0.0, {{preset.a, 1.0 / (preset.a * preset.a)}}};
    case Preset::Kind::Mixed: {
        require(preset.a != 0.0 && std::isfinite(preset.a), ErrorCode::ZeroJumpSize,
                "mixed preset needs a nonzero jump size");
        require(preset.sigma >= 0.0 && preset.sigma < 1.0, ErrorCode::NonNormalizable,
                "mixed preset needs 0 <= sigma < 1 to leave room for jumps");
        const double nu = (1.0 - preset.sigma * preset.sigma) / (preset.a * preset.a);
        return {preset.sigma, {{preset.a, nu}}};
    }
    }
    fail(ErrorCode::InvalidArgument, "unknown preset");
}

std::vector<StandardLevySpec> make_standard_specs(int J, const std::vector<Preset>& recipe)
{
    require(J >= 1, ErrorCode::InvalidArgument, "J must be at least 1");
    require(recipe.size() == 1 || recipe.size() == static_cast<std::size_t>(J),
            ErrorCode::DimensionMismatch, "driver recipe must have 1 or J entries");
    std::vector<StandardLevySpec> specs;
    specs.reserve(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        specs.push_back(from_preset(recipe.size() == 1 ? recipe.front() : recipe[static_cast<std::size_t>(j)]));
        specs.back().validate();
    }
    return specs;
}

std::vector<StandardLevySpec> make_standard_specs(int J, std::vector<StandardLevySpec> recipe)
{
    require(J >= 1, ErrorCode::InvalidArgument, "J must be at least 1");
    if (recipe.size() == 1) {
        recipe.resize(static_cast<std::size_t>(J), recipe.front());
    }
    require(recipe.size() == static_cast<std::size_t>(J), ErrorCode::DimensionMismatch,
            "driver recipe must have 1 or J entries");
    for (const auto& spec : recipe) {
        spec.validate();
    }
    return recipe;
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> TimeGrid::find(double t) const
{
    const double tol = 1e-12 * std::max(1.0, horizon());
    const auto it = std::lower_bound(times.begin(), times.end(), t - tol);
    if (it != times.end() && std::abs(*it - t) <= tol) {
        return static_cast<std::size_t>(it - times.begin());
    }
    return std::nullopt;
}

std::size_t TimeGrid::node_of(double t) const
{
    const auto node = find(t);
    require(node.has_value(), ErrorCode::GridMismatch, "time " + format_double(t) + " is not a grid node");
    return *node;
}

TimeGrid TimeGrid::uniform(double T, int nScheduled)
{
    require(T > 0.0 && std::isfinite(T), ErrorCode::InvalidArgument, "horizon must be positive");
    require(nScheduled >= 1, ErrorCode::InvalidArgument, "nScheduled must be at least 1");
    TimeGrid grid;
    grid.times.resize(static_cast<std::size_t>(nScheduled) + 1);
    for (int k = 0; k <= nScheduled; ++k) {
        grid.times[static_cast<std::size_t>(k)] = T * static_cast<double>(k) / static_cast<double>(nScheduled);
    }
    grid.times.back() = T;
    grid.kinds.assign(grid.times.size(), NodeKind::Scheduled);
    return grid;
}

void TimeGrid::validate() const
{
    require(times.size() >= 2 && kinds.size() == times.size(), ErrorCode::GridMismatch,
            "grid needs at least two nodes");
    require(times.front() == 0.0, ErrorCode::GridMismatch, "grid must start at 0");
    for (std::size_t i = 1; i < times.size(); ++i) {
        require(times[i] > times[i - 1], ErrorCode::GridMismatch, "grid times must increase strictly");
    }
}

// ---------------------------------------------------------------------------

SamplePath::SamplePath(std::shared_ptr<const TimeGrid> grid, std::size_t components,
                       std::vector<double> increments, std::vector<std::vector<JumpEvent>> jumpLog)
    : grid_(std::move(grid))
    , components_(components)
    , cells_(grid_->cells())
    , nodes_(grid_->nodes())
    , increments_(std::move(increments))
    , jump_log_(std::move(jumpLog))
{
    require(increments_.size() == components_ * cells_, ErrorCode::DimensionMismatch,
            "increment array does not match grid and component count");
    if (jump_log_.empty()) {
        jump_log_.resize(components_);
    }
    values_.assign(components_ * nodes_, 0.0);
    for (std::size_t j = 0; j < components_; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < cells_; ++k) {
            acc += increments_[j * cells_ + k];
            values_[j * nodes_ + k + 1] = acc;
        }
    }
}

Vector SamplePath::state(std::size_t node) const
{
    Vector m(static_cast<Eigen::Index>(components_));
    for (std::size_t j = 0; j < components_; ++j) {
        m(static_cast<Eigen::Index>(j)) = value(j, node);
    }
    return m;
}

SamplePath simulate_paths(const std::vector<StandardLevySpec>& specs, double T, int nScheduled,
                          std::uint64_t seed, std::uint64_t pathIndex, std::span<const double> extraTimes)
{
    require(!specs.empty(), ErrorCode::InvalidArgument, "at least one driver spec is required");
    for (const auto& spec : specs) {
        spec.validate();
    }
    TimeGrid base = TimeGrid::uniform(T, nScheduled);

    struct Arrival {
        double time;
        std::size_t component;
        double size;
    };
    std::vector<Arrival> arrivals;
    for (std::size_t j = 0; j < specs.size(); ++j) {
        for (std::size_t m = 0; m < specs[j].jumps.size(); ++m) {
            const Jump& jump = specs[j].jumps[m];
            CounterRng rng(seed, pathIndex, static_cast<std::uint32_t>(j * 256 + m), StreamPurpose::JumpTimes);
            double t = rng.exponential(jump.intensity);
            while (t < T) {
                arrivals.push_back({t, j, jump.size});
                t += rng.exponential(jump.intensity);
            }
        }
    }
    std::sort(arrivals.begin(), arrivals.end(),
              [](const Arrival& a, const Arrival& b) { return a.time < b.time; });

    // merge scheduled nodes, extra nodes and arrival times into one grid
    std::vector<std::pair<double, NodeKind>> nodes;
    nodes.reserve(base.nodes() + extraTimes.size() + arrivals.size());
    for (double t : base.times) {
        nodes.emplace_back(t, NodeKind::Scheduled);
    }
    for (double t : extraTimes) {
        require(t >= 0.0 && t <= T, ErrorCode::InvalidArgument, "extra grid times must lie in [0, T]");
        nodes.emplace_back(t, NodeKind::Scheduled);
    }
    for (const Arrival& a : arrivals) {
        nodes.emplace_back(a.time, NodeKind::Jump);
    }
    std::stable_sort(nodes.begin(), nodes.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    auto grid = std::make_shared<TimeGrid>();
    for (const auto& [t, kind] : nodes) {
        if (!grid->times.empty() && grid->times.back() == t) {
            if (kind == NodeKind::Jump) {
                grid->kinds.back() = NodeKind::Jump;
            }
            continue;
        }
        grid->times.push_back(t);
        grid->kinds.push_back(kind);
    }

    const std::size_t cells = grid->cells();
    const std::size_t J = specs.size();
    std::vector<double> increments(J * cells, 0.0);
    std::vector<std::vector<JumpEvent>> jumpLog(J);

    // jumps land on the cell that ends at their arrival time
    std::size_t cell = 0;
    for (const Arrival& a : arrivals) {
        while (grid->times[cell + 1] < a.time) {
            ++cell;
        }
        increments[a.component * cells + cell] += a.size;
        jumpLog[a.component].push_back({a.time, a.size});
    }

    for (std::size_t j = 0; j < J; ++j) {
        const StandardLevySpec& spec = specs[j];
        double compensatorRate = 0.0;
        for (const Jump& jump : spec.jumps) {
            compensatorRate += jump.size * jump.intensity;
        }
        CounterRng rng(seed, pathIndex, static_cast<std::uint32_t>(j), StreamPurpose::Brownian);
        for (std::size_t k = 0; k < cells; ++k) {
            const double dt = grid->times[k + 1] - grid->times[k];
            double inc = increments[j * cells + k] - compensatorRate * dt;
            if (spec.sigma > 0.0) {
                inc += spec.sigma * std::sqrt(dt) * rng.normal();
            }
            increments[j * cells + k] = inc;
        }
    }
    return SamplePath(std::move(grid), J, std::move(increments), std::move(jumpLog));
}

SamplePath explicit_path(double T, const std::vector<std::vector<double>>& increments)
{
    require(!increments.empty() && !increments.front().empty(), ErrorCode::InvalidArgument,
            "explicit driver needs at least one component and one cell");
    const std::size_t cells = increments.front().size();
    auto grid = std::make_shared<TimeGrid>(TimeGrid::uniform(T, static_cast<int>(cells)));
    std::vector<double> flat;
    flat.reserve(increments.size() * cells);
    for (const auto& component : increments) {
        require(component.size() == cells, ErrorCode::DimensionMismatch,
                "explicit driver components must have equal length");
        flat.insert(flat.end(), component.begin(), component.end());
    }
    return SamplePath(std::move(grid), increments.size(), std::move(flat));
}

std::size_t DriverSampler::components() const
{
    return explicitIncrements ? explicitIncrements->size() : specs.size();
}

SamplePath DriverSampler::sample(std::uint64_t seed, std::uint64_t pathIndex) const
{
    if (explicitIncrements) {
        return explicit_path(horizon, *explicitIncrements);
    }
    return simulate_paths(specs, horizon, nScheduled, seed, pathIndex, extraTimes);
}

// ---------------------------------------------------------------------------

LevyPath::LevyPath(space::CovarianceSpec spec, SamplePath driver)
    : spec_(std::move(spec))
    , driver_(std::move(driver))
{
    require(driver_.components() == static_cast<std::size_t>(spec_.modes()), ErrorCode::DimensionMismatch,
            "driver has " + std::to_string(driver_.components()) + " components, covariance has "
                + std::to_string(spec_.modes()) + " modes");
}

Vector LevyPath::value(std::size_t node) const
{
    return spec_.eigenbasis() * driver_.state(node).cwiseProduct(spec_.sqrt_eigenvalues());
}

Vector LevyPath::increment(std::size_t cell) const
{
    Vector dm(static_cast<Eigen::Index>(driver_.components()));
    for (std::size_t j = 0; j < driver_.components(); ++j) {
        dm(static_cast<Eigen::Index>(j)) = driver_.increment(j, cell);
    }
    return spec_.eigenbasis() * dm.cwiseProduct(spec_.sqrt_eigenvalues());
}

LevyPath assemble_levy(const space::CovarianceSpec& spec, const SamplePath& driver)
{
    return LevyPath(spec, driver);
}

std::vector<double> project_standard(const LevyPath& path, std::size_t j)
{
    require(j < static_cast<std::size_t>(path.spec().modes()), ErrorCode::IndexOutOfRange,
            "standard component index out of range");
    const auto values = path.driver().values(j);
    if (path.spec().identity_basis()) {
        return {values.begin(), values.end()};
    }
    const auto& spec = path.spec();
    const auto col = static_cast<Eigen::Index>(j);
    std::vector<double> out(path.grid().nodes());
    for (std::size_t node = 0; node < out.size(); ++node) {
        out[node] = spec.eigenbasis().col(col).dot(path.value(node)) / spec.sqrt_eigenvalues()(col);
    }
    return out;
}

SamplePath project_driver(const LevyPath& path, const space::CovarianceSpec& decomposition)
{
    require(decomposition.modes() == path.spec().modes(), ErrorCode::DimensionMismatch,
            "decompositions differ in mode count");
    const std::size_t J = static_cast<std::size_t>(decomposition.modes());
    const std::size_t cells = path.grid().cells();
    // increments of N^k = μ_k^{-1/2} ⟨ΔL, f_k^(μ)⟩
    const Matrix transfer = decomposition.sqrt_eigenvalues().cwiseInverse().asDiagonal()
        * decomposition.eigenbasis().transpose();
    std::vector<double> increments(J * cells);
    for (std::size_t k = 0; k < cells; ++k) {
        const Vector dn = transfer * path.increment(k);
        for (std::size_t j = 0; j < J; ++j) {
            increments[j * cells + k] = dn(static_cast<Eigen::Index>(j));
        }
    }
    return SamplePath(path.driver().grid_ptr(), J, std::move(increments));
}

LevyPath reexpress(const LevyPath& path, const space::CovarianceSpec& decomposition)
{
    return LevyPath(decomposition, project_driver(path, decomposition));
}

LevyPath transport_levy(const LevyPath& path, const space::BasisIsometry& iso)
{
    require(iso.source.same_as(path.spec()), ErrorCode::SpecMismatch,
            "isometry source does not match the path's covariance");
    const SamplePath& m = path.driver();
    const std::size_t J = m.components();
    const std::size_t cells = path.grid().cells();
    std::vector<double> increments(J * cells);
    const bool identity = iso.coordinates == Matrix::Identity(iso.coordinates.rows(), iso.coordinates.cols());
    for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t k = 0; k < cells; ++k) {
            double acc = 0.0;
            if (identity) {
                acc = m.increment(j, k);
            } else {
                for (std::size_t i = 0; i < J; ++i) {
                    const double r = iso.coordinates(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
                    if (r != 0.0) {
                        acc += r * m.increment(i, k);
                    }
                }
            }
            increments[j * cells + k] = acc;
        }
    }
    return LevyPath(iso.target, SamplePath(m.grid_ptr(), J, std::move(increments)));
}

Estimate empirical_covariance(const space::CovarianceSpec& spec, const DriverSampler& sampler,
                              const Vector& u1, const Vector& u2, double t, double s,
                              std::size_t nPaths, std::uint64_t seed, unsigned threads)
{
    require(u1.size() == spec.modes() && u2.size() == spec.modes(), ErrorCode::DimensionMismatch,
            "test vectors must live in U");
    const double T = sampler.horizon;
    require(t >= 0.0 && t <= T && s >= 0.0 && s <= T, ErrorCode::InvalidArgument, "t and s must lie in [0, T]");
    if (t == 0.0 || s == 0.0) {
        return {0.0, 0.0};
    }
    DriverSampler refined = sampler;
    refined.extraTimes.push_back(t);
    refined.extraTimes.push_back(s);

    Tally tally = reduce_paths(nPaths, Tally(1, 0), threads, [&](std::size_t i, Tally& acc) {
        const LevyPath path(spec, refined.sample(seed, i));
        const auto& grid = path.grid();
        const double a = path.value(grid.node_of(t)).dot(u1);
        const double b = path.value(grid.node_of(s)).dot(u2);
        acc.moments[0].add(a * b);
    });
    return {tally.moments[0].mean(), tally.moments[0].se()};
}

std::string to_string(NodeKind kind)
{
    return kind == NodeKind::Jump ? "jump" : "scheduled";
}

std::string to_csv(const TimeGrid& grid, const std::vector<std::string>& names,
                   const std::vector<std::span<const double>>& columns)
{
    require(names.size() == columns.size(), ErrorCode::DimensionMismatch, "one name per column");
    std::string out = "time,kind";
    for (const auto& name : names) {
        out += ',';
        out += name;
    }
    out += '\n';
    for (std::size_t node = 0; node < grid.nodes(); ++node) {
        out += format_double(grid.times[node]);
        out += ',';
        out += to_string(grid.kinds[node]);
        for (const auto& column : columns) {
            out += ',';
            out += format_double(column[node]);
        }
        out += '\n';
    }
    return out;
}

std::string to_csv(const SamplePath& path)
{
    std::vector<std::string> names;
    std::vector<std::span<const double>> columns;
    for (std::size_t j = 0; j < path.components(); ++j) {
        names.push_back("M" + std::to_string(j + 1));
        columns.push_back(path.values(j));
    }
    return to_csv(path.grid(), names, columns);
}

} // namespace itolevy::process
