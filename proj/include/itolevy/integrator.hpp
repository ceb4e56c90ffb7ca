#pragma once

/**
 * @file integrator.hpp
 * @brief The four integral layers and their bracket processes.
 *
 *   ito_h        H-valued integrand against one real standard component
 *   ito_seq      ℓ²(H)-valued integrand against (M^j), Σ_j X^j • M^j
 *   ito_l2lambda ℓ²(H)-valued integrand against an ℓ²_λ-valued Lévy path
 *   ito_general  L₂⁰(H)-valued integrand against a U-valued Lévy path,
 *                defined as Ψ_λ(X) • Φ_λ(L)
 *
 * Integrals are left-point sums over the refined grid, accumulated in
 * ascending cell and mode order. For simple integrands this equals the exact
 * pathwise sum over breakpoints; the closed forms are kept as separate
 * routes (simple_sum_*) so they can be compared.
 */

#include "itolevy/integrand.hpp"
#include "itolevy/process.hpp"
#include "itolevy/space.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace itolevy::integrator {

/// Cumulative H-valued integral at every grid node.
struct IntegralPath {
    std::shared_ptr<const process::TimeGrid> grid;
    Matrix values; // dH × nodes

    HVector terminal() const { return values.col(values.cols() - 1); }
    HVector at(std::size_t node) const { return values.col(static_cast<Eigen::Index>(node)); }
    int dimension() const { return static_cast<int>(values.rows()); }

    std::string to_csv() const;
};

IntegralPath operator+(const IntegralPath& a, const IntegralPath& b);

struct BracketPath {
    std::shared_ptr<const process::TimeGrid> grid;
    std::vector<double> values;

    double terminal() const { return values.back(); }
};

// --- layer 1 -----------------------------------------------------------------

IntegralPath ito_h(const HIntegrand& x, const process::SamplePath& driver, std::size_t j);

/// Explicit series Σ_k (⟨X, f_k⟩ • M) f_k over the orthonormal basis given by
/// the columns of `basis`. Only the basis-independence test uses this route.
IntegralPath ito_h_in_basis(const HIntegrand& x, const process::SamplePath& driver, std::size_t j,
                            const Matrix& basis);

// --- layer 2 -----------------------------------------------------------------

/// `order` permutes the summation over modes; empty means ascending.
IntegralPath ito_seq(const SeqIntegrand& x, const process::SamplePath& drivers,
                     std::span<const std::size_t> order = {});

// --- layer 3 -----------------------------------------------------------------

/// L must be a path over ℓ²_λ, i.e. its spec uses the identity basis.
/// Throws SpecMismatch otherwise.
IntegralPath ito_l2lambda(const SeqIntegrand& x, const process::LevyPath& path);

// --- layer 4 -----------------------------------------------------------------

/// Ψ_λ(X) • Φ_λ(L).
IntegralPath ito_general(const OperatorIntegrand& x, const process::LevyPath& path);

/// ξ^j • M^j with ξ^j = X e_j, one path per mode.
std::vector<IntegralPath> series_terms(const OperatorIntegrand& x, const process::LevyPath& path);

/// Fixed-order sum of series_terms.
IntegralPath ito_general_series(const OperatorIntegrand& x, const process::LevyPath& path);

// --- closed forms for simple integrands --------------------------------------

/// Σ_i X_i (M^{t_{i+1}} − M^{t_i}).
HVector simple_sum_h(const HIntegrand& x, const process::SamplePath& driver, std::size_t j);
/// Σ_i Σ_j X_i^j ((M^j)^{t_{i+1}} − (M^j)^{t_i}).
HVector simple_sum_seq(const SeqIntegrand& x, const process::SamplePath& drivers);
/// Σ_i X_i (L^{t_{i+1}} − L^{t_i}), applying X_i as an operator on U.
HVector simple_sum_general(const OperatorIntegrand& x, const process::LevyPath& path);

// --- brackets ----------------------------------------------------------------

/// ⟨M^j, M^k⟩_t = δ_jk t on the grid.
BracketPath angle_bracket(const process::TimeGrid& grid, std::shared_ptr<const process::TimeGrid> owner,
                          std::size_t j, std::size_t k);
BracketPath angle_bracket(const process::SamplePath& path, std::size_t j, std::size_t k);

/// ∫ ⟨X_s, Y_s⟩_H d⟨M^j, M^k⟩_s, left-point.
BracketPath covariation_integral(const HIntegrand& x, const HIntegrand& y, const process::SamplePath& driver,
                                 std::size_t j, std::size_t k);

/// ∫ ‖X_s‖² ds from cell values, left-point, one value per node.
BracketPath energy(std::span<const HVector> cells, const process::SamplePath& path);
BracketPath energy(std::span<const SeqH> cells, const process::SamplePath& path);
BracketPath energy(std::span<const HSOperator> cells, const process::SamplePath& path);

/// Pathwise realised covariation Σ ΔM^j ΔM^k.
BracketPath realized_covariation(const process::SamplePath& path, std::size_t j, std::size_t k);

// --- kernels on pre-sampled cell values ---------------------------------------

IntegralPath integrate_cells(std::span<const HVector> cells, const process::SamplePath& driver, std::size_t j);
IntegralPath integrate_cells(std::span<const SeqH> cells, const process::SamplePath& drivers,
                             std::span<const std::size_t> order = {});
/// Single-mode term: column j of every cell against M^j.
IntegralPath integrate_column(std::span<const SeqH> cells, const process::SamplePath& drivers, std::size_t j);

/// Standard components of L: the stored driver for an identity eigenbasis,
/// otherwise λ_j^{-1/2}⟨ΔL, e_j^(λ)⟩ per cell.
process::SamplePath standard_components(const process::LevyPath& path);

} // namespace itolevy::integrator
