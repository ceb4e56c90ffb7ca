#pragma once

/**
 * @file process.hpp
 * @brief Standard Lévy sequences, their grid paths, and U-valued Lévy paths.
 *
 * A standard Lévy process here is a Brownian part plus finitely many
 * compensated Poisson parts, normalised so that ⟨M, M⟩_t = t. Paths live on
 * an event-refined grid: the scheduled nodes k·T/n plus every jump time of
 * every component, so each jump sits exactly on a node.
 */

#include "itolevy/space.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace itolevy::process {

using space::Matrix;
using space::Vector;

struct Jump {
    double size = 0.0;      // a_m
    double intensity = 0.0; // ν_m
};

struct StandardLevySpec {
    double sigma = 1.0;
    std::vector<Jump> jumps;

    /// σ² + Σ a²ν
    double bracket_rate() const;
    void validate() const;
};

struct Preset {
    enum class Kind { Brownian, Poisson, Mixed };
    Kind kind = Kind::Brownian;
    double sigma = 0.0; // Mixed only
    double a = 1.0;     // Poisson and Mixed

    static Preset brownian() { return {Kind::Brownian, 1.0, 0.0}; }
    static Preset poisson(double a) { return {Kind::Poisson, 0.0, a}; }
    static Preset mixed(double sigma, double a) { return {Kind::Mixed, sigma, a}; }
};

/// Throws NonNormalizable or ZeroJumpSize.
StandardLevySpec from_preset(const Preset& preset);

/// One preset per index, or a single preset repeated J times.
std::vector<StandardLevySpec> make_standard_specs(int J, const std::vector<Preset>& recipe);

/// Validates explicit per-index specs (normalisation within 1e-12).
std::vector<StandardLevySpec> make_standard_specs(int J, std::vector<StandardLevySpec> recipe);

enum class NodeKind { Scheduled, Jump };

struct TimeGrid {
    std::vector<double> times;
    std::vector<NodeKind> kinds;

    std::size_t nodes() const { return times.size(); }
    std::size_t cells() const { return times.empty() ? 0 : times.size() - 1; }
    double horizon() const { return times.back(); }

    /// Node whose time equals t within 1e-12·T; nullopt otherwise.
    std::optional<std::size_t> find(double t) const;
    /// Like find, but throws GridMismatch.
    std::size_t node_of(double t) const;

    static TimeGrid uniform(double T, int nScheduled);
    void validate() const;
};

struct JumpEvent {
    double time = 0.0;
    double size = 0.0;
};

/**
 * Realised grid path of J standard Lévy processes.
 *
 * increments are stored per component over grid cells; cumulative values
 * are the fixed-order prefix sums, so value(j, last) is M^j_T.
 */
class SamplePath {
public:
    SamplePath() = default;
    SamplePath(std::shared_ptr<const TimeGrid> grid, std::size_t components,
               std::vector<double> increments, std::vector<std::vector<JumpEvent>> jumpLog = {});

    const TimeGrid& grid() const { return *grid_; }
    const std::shared_ptr<const TimeGrid>& grid_ptr() const { return grid_; }
    std::size_t components() const { return components_; }

    double increment(std::size_t j, std::size_t cell) const { return increments_[j * cells_ + cell]; }
    double value(std::size_t j, std::size_t node) const { return values_[j * nodes_ + node]; }
    double terminal(std::size_t j) const { return value(j, nodes_ - 1); }

    std::span<const double> increments(std::size_t j) const
    {
        return {increments_.data() + j * cells_, cells_};
    }
    std::span<const double> values(std::size_t j) const { return {values_.data() + j * nodes_, nodes_}; }

    const std::vector<std::vector<JumpEvent>>& jump_log() const { return jump_log_; }

    /// M(node) as a J-vector.
    Vector state(std::size_t node) const;

private:
    std::shared_ptr<const TimeGrid> grid_;
    std::size_t components_ = 0;
    std::size_t cells_ = 0;
    std::size_t nodes_ = 0;
    std::vector<double> increments_;
    std::vector<double> values_;
    std::vector<std::vector<JumpEvent>> jump_log_;
};

/**
 * Draws one path. Jump times are exact exponential arrivals on [0, T];
 * Brownian increments are drawn per refined cell; each cell carries the
 * compensator −a·ν·Δt. Identical (seed, pathIndex) give identical paths.
 * extraTimes are added as scheduled nodes.
 */
SamplePath simulate_paths(const std::vector<StandardLevySpec>& specs, double T, int nScheduled,
                          std::uint64_t seed, std::uint64_t pathIndex,
                          std::span<const double> extraTimes = {});

/// Path from given increments on the uniform grid (no jumps).
SamplePath explicit_path(double T, const std::vector<std::vector<double>>& increments);

/// Path recipe: either simulated from specs or a fixed explicit path.
struct DriverSampler {
    std::vector<StandardLevySpec> specs;
    double horizon = 1.0;
    int nScheduled = 1;
    std::vector<double> extraTimes;
    /// When set, every path index returns these increments.
    std::optional<std::vector<std::vector<double>>> explicitIncrements;

    std::size_t components() const;
    SamplePath sample(std::uint64_t seed, std::uint64_t pathIndex) const;
};

/**
 * U-valued Lévy path L_t = Σ_j √λ_j M^j_t e_j^(λ), kept implicitly through
 * its driver.
 */
class LevyPath {
public:
    LevyPath() = default;
    LevyPath(space::CovarianceSpec spec, SamplePath driver);

    const space::CovarianceSpec& spec() const { return spec_; }
    const SamplePath& driver() const { return driver_; }
    const TimeGrid& grid() const { return driver_.grid(); }

    /// L at a node, in reference coordinates of U.
    Vector value(std::size_t node) const;
    Vector terminal() const { return value(grid().nodes() - 1); }
    /// L(t_{k+1}) − L(t_k) in reference coordinates.
    Vector increment(std::size_t cell) const;

private:
    space::CovarianceSpec spec_;
    SamplePath driver_;
};

LevyPath assemble_levy(const space::CovarianceSpec& spec, const SamplePath& driver);

/// λ_j^{-1/2} ⟨L_t, e_j^(λ)⟩_U at every grid node (j is 0-based). With the
/// identity eigenbasis this returns the stored driver values unchanged.
std::vector<double> project_standard(const LevyPath& path, std::size_t j);

/// All standard components of L under another eigendecomposition of the
/// same covariance, computed from the U-valued increments.
SamplePath project_driver(const LevyPath& path, const space::CovarianceSpec& decomposition);

/// L re-expressed through another eigendecomposition of the same Q.
LevyPath reexpress(const LevyPath& path, const space::CovarianceSpec& decomposition);

/// Image of L under an eigenvalue-compatible isometry: a path in the
/// isometry's target space with driver R·M. Throws SpecMismatch.
LevyPath transport_levy(const LevyPath& path, const space::BasisIsometry& iso);

struct Estimate {
    double estimate = 0.0;
    double se = 0.0;
};

/// Monte Carlo estimate of E[⟨L_t, u1⟩⟨L_s, u2⟩]. t and s are added to the
/// grid when they are not scheduled nodes.
Estimate empirical_covariance(const space::CovarianceSpec& spec, const DriverSampler& sampler,
                              const Vector& u1, const Vector& u2, double t, double s,
                              std::size_t nPaths, std::uint64_t seed, unsigned threads = 1);

/// Columnar dump: time,kind,<names...>; one row per node.
std::string to_csv(const TimeGrid& grid, const std::vector<std::string>& names,
                   const std::vector<std::span<const double>>& columns);

std::string to_csv(const SamplePath& path);

std::string to_string(NodeKind kind);

} // namespace itolevy::process
