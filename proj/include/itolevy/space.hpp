#pragma once

/**
 * @file space.hpp
 * @brief Truncated Hilbert spaces and the isometries between them.
 *
 * Coordinates are always taken with respect to fixed reference bases:
 *  - H has dimension dH, vectors are plain coordinate vectors;
 *  - U has dimension J; the covariance eigenbasis e_j^(λ) is stored as the
 *    columns of an orthogonal J×J matrix;
 *  - U₀ = Q^{1/2}(U) has the orthonormal basis e_j = √λ_j e_j^(λ);
 *  - ℓ²_λ carries ⟨v, w⟩ = Σ λ_j v_j w_j, with orthonormal basis g_j / √λ_j.
 *
 * A Hilbert–Schmidt operator S ∈ L₂⁰(H) is stored by its images S e_j of
 * the U₀ basis, one column per mode.
 */

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace itolevy::space {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Elements of H, in coordinates of the fixed orthonormal basis (f_k).
using HVector = Vector;

struct SpaceConfig {
    int dH = 1;
    int J = 1;
    double horizon = 1.0;

    void validate() const;
};

class CovarianceSpec {
public:
    CovarianceSpec() = default;

    const Vector& eigenvalues() const { return eigenvalues_; }
    const Vector& sqrt_eigenvalues() const { return sqrt_eigenvalues_; }
    /// Column j holds the reference coordinates of e_j^(λ).
    const Matrix& eigenbasis() const { return eigenbasis_; }
    bool identity_basis() const { return identity_basis_; }
    int modes() const { return static_cast<int>(eigenvalues_.size()); }
    double trace() const { return trace_; }
    /// Declared Σ_{j>J} λ_j of the untruncated sequence.
    double tail_mass() const { return tail_mass_; }

    /// e_j = √λ_j e_j^(λ) in reference coordinates of U.
    Vector u0_basis_vector(int j) const;

    /// Exact equality of eigenvalues and basis entries.
    bool same_as(const CovarianceSpec& other) const;

private:
    friend CovarianceSpec make_covariance_unchecked(Vector, Matrix, double);

    Vector eigenvalues_;
    Vector sqrt_eigenvalues_;
    Matrix eigenbasis_;
    double trace_ = 0.0;
    double tail_mass_ = 0.0;
    bool identity_basis_ = false;
};

struct IdentityBasis {};
struct SeededBasis {
    std::uint64_t seed = 0;
};
using BasisChoice = std::variant<IdentityBasis, SeededBasis, Matrix>;

/// Validated covariance. Throws NonPositiveEigenvalue, NonOrthogonalBasis
/// (Gram deviation above 1e-10) or DimensionMismatch.
CovarianceSpec make_covariance(const Vector& eigenvalues, const BasisChoice& basis,
                               double tailMass = 0.0);

/// Skips the positivity and orthogonality checks. Only fault-injection runs
/// use this.
CovarianceSpec make_covariance_unchecked(Vector eigenvalues, Matrix basis, double tailMass = 0.0);

/// Haar-distributed orthogonal matrix: Householder QR of a Gaussian matrix
/// with the signs of R's diagonal folded into Q.
Matrix random_orthogonal(int n, std::uint64_t seed);

/// max |BᵀB − I| entrywise.
double gram_deviation(const Matrix& basis);

// ---------------------------------------------------------------------------
// ℓ²_λ

struct WeightedSeq {
    Vector coords;
    Vector weights;
};

double inner(const WeightedSeq& a, const WeightedSeq& b);
double norm(const WeightedSeq& v);

/// g_j^(λ) = g_j / √λ_j.
WeightedSeq weighted_basis_vector(const CovarianceSpec& spec, int j);

// ---------------------------------------------------------------------------
// ℓ²(H) and L₂⁰(H)

/// Truncated element of ℓ²(H); column j is the j-th entry.
struct SeqH {
    Matrix entries;

    int modes() const { return static_cast<int>(entries.cols()); }
    HVector entry(int j) const { return entries.col(j); }
};

double norm(const SeqH& w);

/// Column j holds S e_j, the image of the j-th U₀ basis vector.
struct HSOperator {
    Matrix columns;
};

double hs_norm(const HSOperator& s);

/// Φ_λ : U → ℓ²_λ, coords[j] = ⟨u, e_j^(λ)⟩_U / √λ_j.
WeightedSeq phi_lambda_apply(const CovarianceSpec& spec, const Vector& u);
Vector phi_lambda_inverse(const CovarianceSpec& spec, const WeightedSeq& v);

/// Ψ_λ : L₂⁰(H) → ℓ²(H), entries[j] = S e_j.
SeqH psi_lambda_apply(const CovarianceSpec& spec, const HSOperator& s);
HSOperator psi_lambda_inverse(const CovarianceSpec& spec, const SeqH& w);

/// Restriction to U₀ of a bounded operator given by its images of e_j^(λ):
/// column j of the result is √λ_j A_j.
HSOperator restrict_bounded_operator(const CovarianceSpec& spec, const Matrix& a);

/// Same, for an operator whose columns are images of the reference basis of U.
HSOperator restrict_reference_operator(const CovarianceSpec& spec, const Matrix& reference);

/// Applies S to a vector of U given in reference coordinates.
HVector apply(const CovarianceSpec& spec, const HSOperator& s, const Vector& u);

/// Largest singular value estimated by power iteration on AᵀA.
double operator_norm(const Matrix& a, int iterations = 500);

// ---------------------------------------------------------------------------
// Isometries between coordinate models

enum class IsometryKind { PhiLambda, PhiMu, Composed };

/**
 * An isometry of ℓ²_λ onto ℓ²_μ that maps eigenvectors to eigenvectors,
 * together with its companion on ℓ²(H).
 *
 * In coordinates both act by the same orthogonal matrix R: R_kj is nonzero
 * only when μ_k = λ_j, so w_k = Σ_j R_kj v_j for v ∈ ℓ²_λ and
 * Ψ(w)_k = Σ_j R_kj w_j entrywise for w ∈ ℓ²(H).
 */
struct BasisIsometry {
    IsometryKind kind = IsometryKind::Composed;
    CovarianceSpec source;
    /// ℓ²_μ modelled with the identity basis.
    CovarianceSpec target;
    Matrix coordinates;
    /// target index k is fed by source index permutation[k] before rotation.
    std::vector<std::size_t> permutation;
    std::vector<Matrix> block_rotations;

    WeightedSeq apply_phi(const WeightedSeq& v) const;
    WeightedSeq apply_phi_inverse(const WeightedSeq& w) const;
    SeqH apply_psi(const SeqH& w) const;
};

/// Groups of indices with exactly equal eigenvalues, in order of first
/// appearance; indices inside a group ascend.
std::vector<std::vector<std::size_t>> eigenvalue_blocks(const Vector& eigenvalues);

/// Throws MultisetMismatch, BlockShapeMismatch or NonOrthogonalRotation.
/// An empty rotation list means identity blocks.
BasisIsometry build_eigen_isometry(const CovarianceSpec& source,
                                   const std::vector<std::size_t>& permutation,
                                   const std::vector<Matrix>& blockRotations = {});

/// Derives the permutation by matching eigenvalues exactly (stable order).
BasisIsometry build_eigen_isometry(const CovarianceSpec& source, const Vector& targetEigenvalues,
                                   const std::vector<Matrix>& blockRotations = {});

/// Φ_λ itself, viewed as an isometry onto ℓ²_λ.
BasisIsometry phi_lambda_isometry(const CovarianceSpec& spec);

/// The eigendecomposition (μ, f^(μ)) of the same Q induced by the isometry:
/// f_k^(μ) = Σ_j R_kj e_j^(λ).
CovarianceSpec equivalent_decomposition(const BasisIsometry& iso);

/// Seeded random permutation and Haar rotations inside every block of equal
/// target eigenvalues.
BasisIsometry random_eigen_isometry(const CovarianceSpec& source, std::uint64_t seed);

} // namespace itolevy::space
