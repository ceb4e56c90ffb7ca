#include "itolevy/space.hpp"

#include "itolevy/error.hpp"
#include "itolevy/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace itolevy::space {

namespace {

constexpr double kGramTolerance = 1e-10;

void require_dimension(bool ok, const std::string& what)
{
    require(ok, ErrorCode::DimensionMismatch, what);
}

} // namespace

void SpaceConfig::validate() const
{
    require(dH >= 1, ErrorCode::InvalidArgument, "dH must be at least 1");
    require(J >= 1, ErrorCode::InvalidArgument, "J must be at least 1");
    require(horizon > 0.0 && std::isfinite(horizon), ErrorCode::InvalidArgument,
            "horizon T must be positive");
}

Vector CovarianceSpec::u0_basis_vector(int j) const
{
    return sqrt_eigenvalues_(j) * eigenbasis_.col(j);
}

bool CovarianceSpec::same_as(const CovarianceSpec& other) const
{
    return eigenvalues_.size() == other.eigenvalues_.size()
        && eigenbasis_.rows() == other.eigenbasis_.rows()
        && eigenbasis_.cols() == other.eigenbasis_.cols()
        && eigenvalues_ == other.eigenvalues_ && eigenbasis_ == other.eigenbasis_;
}

CovarianceSpec make_covariance_unchecked(Vector eigenvalues, Matrix basis, double tailMass)
{
    CovarianceSpec spec;
    spec.sqrt_eigenvalues_ = eigenvalues.cwiseSqrt();
    double trace = 0.0;
    for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
        trace += eigenvalues(j);
    }
    spec.trace_ = trace;
    spec.tail_mass_ = tailMass;
    spec.identity_basis_ = basis.rows() == basis.cols()
        && basis == Matrix::Identity(basis.rows(), basis.cols());
    spec.eigenvalues_ = std::move(eigenvalues);
    spec.eigenbasis_ = std::move(basis);
    return spec;
}

CovarianceSpec make_covariance(const Vector& eigenvalues, const BasisChoice& basis, double tailMass)
{
    require_dimension(eigenvalues.size() >= 1, "at least one eigenvalue is required");
    for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
        require(eigenvalues(j) > 0.0 && std::isfinite(eigenvalues(j)),
                ErrorCode::NonPositiveEigenvalue,
                "eigenvalue " + std::to_string(j + 1) + " = " + std::to_string(eigenvalues(j)));
    }
    require(tailMass >= 0.0 && std::isfinite(tailMass), ErrorCode::InvalidArgument,
            "tailMass must be finite and nonnegative");

    const auto n = static_cast<int>(eigenvalues.size());
    Matrix b;
    if (std::holds_alternative<IdentityBasis>(basis)) {
        b = Matrix::Identity(n, n);
    } else if (const auto* seeded = std::get_if<SeededBasis>(&basis)) {
        b = random_orthogonal(n, seeded->seed);
    } else {
        b = std::get<Matrix>(basis);
        require_dimension(b.rows() == n && b.cols() == n,
                          "eigenbasis must be " + std::to_string(n) + "x" + std::to_string(n));
        const double dev = gram_deviation(b);
        require(dev <= kGramTolerance, ErrorCode::NonOrthogonalBasis,
                "Gram deviation " + std::to_string(dev) + " exceeds 1e-10");
    }
    return make_covariance_unchecked(eigenvalues, std::move(b), tailMass);
}

Matrix random_orthogonal(int n, std::uint64_t seed)
{
    require(n >= 1, ErrorCode::InvalidArgument, "random_orthogonal needs n >= 1");
    CounterRng rng(seed, 0, static_cast<std::uint32_t>(n), StreamPurpose::Rotation);
    Matrix g(n, n);
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) {
            g(r, c) = rng.normal();
        }
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix& r = qr.matrixQR();
    for (int c = 0; c < n; ++c) {
        if (r(c, c) < 0.0) {
            q.col(c) = -q.col(c);
        }
    }
    return q;
}

double gram_deviation(const Matrix& basis)
{
    const Matrix gram = basis.transpose() * basis;
    return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

double inner(const WeightedSeq& a, const WeightedSeq& b)
{
    require_dimension(a.coords.size() == b.coords.size() && a.weights.size() == a.coords.size(),
                      "weighted sequences differ in length");
    double acc = 0.0;
    for (Eigen::Index j = 0; j < a.coords.size(); ++j) {
        acc += a.weights(j) * a.coords(j) * b.coords(j);
    }
    return acc;
}

double norm(const WeightedSeq& v)
{
    return std::sqrt(inner(v, v));
}

WeightedSeq weighted_basis_vector(const CovarianceSpec& spec, int j)
{
    require(j >= 0 && j < spec.modes(), ErrorCode::IndexOutOfRange, "mode index out of range");
    WeightedSeq g{Vector::Zero(spec.modes()), spec.eigenvalues()};
    g.coords(j) = 1.0 / spec.sqrt_eigenvalues()(j);
    return g;
}

double norm(const SeqH& w)
{
    return w.entries.norm();
}

double hs_norm(const HSOperator& s)
{
    double acc = 0.0;
    for (Eigen::Index j = 0; j < s.columns.cols(); ++j) {
        acc += s.columns.col(j).squaredNorm();
    }
    return std::sqrt(acc);
}

WeightedSeq phi_lambda_apply(const CovarianceSpec& spec, const Vector& u)
{
    require_dimension(u.size() == spec.modes(), "U vector has wrong dimension");
    Vector projected = spec.eigenbasis().transpose() * u;
    return {projected.cwiseQuotient(spec.sqrt_eigenvalues()), spec.eigenvalues()};
}

Vector phi_lambda_inverse(const CovarianceSpec& spec, const WeightedSeq& v)
{
    require_dimension(v.coords.size() == spec.modes(), "weighted sequence has wrong length");
    return spec.eigenbasis() * v.coords.cwiseProduct(spec.sqrt_eigenvalues());
}

SeqH psi_lambda_apply(const CovarianceSpec& spec, const HSOperator& s)
{
    require_dimension(s.columns.cols() == spec.modes(), "operator must have one column per mode");
    return {s.columns};
}

HSOperator psi_lambda_inverse(const CovarianceSpec& spec, const SeqH& w)
{
    require_dimension(w.entries.cols() == spec.modes(), "sequence must have one entry per mode");
    return {w.entries};
}

HSOperator restrict_bounded_operator(const CovarianceSpec& spec, const Matrix& a)
{
    require_dimension(a.cols() == spec.modes(), "operator must have one column per mode");
    require(a.allFinite(), ErrorCode::InvalidArgument, "operator entries must be finite");
    return {a * spec.sqrt_eigenvalues().asDiagonal()};
}

HSOperator restrict_reference_operator(const CovarianceSpec& spec, const Matrix& reference)
{
    require_dimension(reference.cols() == spec.modes(), "operator must act on U");
    return restrict_bounded_operator(spec, reference * spec.eigenbasis());
}

HVector apply(const CovarianceSpec& spec, const HSOperator& s, const Vector& u)
{
    require_dimension(u.size() == spec.modes() && s.columns.cols() == spec.modes(),
                      "operator and vector dimensions disagree");
    // S u = Σ_j S e_j^(λ) ⟨u, e_j^(λ)⟩ and S e_j^(λ) = S e_j / √λ_j
    const Vector coeffs = (spec.eigenbasis().transpose() * u).cwiseQuotient(spec.sqrt_eigenvalues());
    return s.columns * coeffs;
}

double operator_norm(const Matrix& a, int iterations)
{
    if (a.size() == 0 || a.isZero(0.0)) {
        return 0.0;
    }
    const Matrix ata = a.transpose() * a;
    Vector x = Vector::Ones(ata.cols()).normalized();
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vector y = ata * x;
        const double n = y.norm();
        if (n == 0.0) {
            // started orthogonal to the range; perturb deterministically
            x = Vector::LinSpaced(ata.cols(), 1.0, 2.0).normalized();
            continue;
        }
        estimate = n;
        x = y / n;
    }
    return std::sqrt(estimate);
}

// ---------------------------------------------------------------------------

WeightedSeq BasisIsometry::apply_phi(const WeightedSeq& v) const
{
    require_dimension(v.coords.size() == coordinates.cols(), "vector does not match isometry source");
    return {coordinates * v.coords, target.eigenvalues()};
}

WeightedSeq BasisIsometry::apply_phi_inverse(const WeightedSeq& w) const
{
    require_dimension(w.coords.size() == coordinates.rows(), "vector does not match isometry target");
    return {coordinates.transpose() * w.coords, source.eigenvalues()};
}

SeqH BasisIsometry::apply_psi(const SeqH& w) const
{
    require_dimension(w.entries.cols() == coordinates.cols(), "sequence does not match isometry source");
    return {w.entries * coordinates.transpose()};
}

std::vector<std::vector<std::size_t>> eigenvalue_blocks(const Vector& eigenvalues)
{
    std::vector<std::vector<std::size_t>> blocks;
    std::vector<double> values;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        const auto it = std::find(values.begin(), values.end(), eigenvalues(i));
        if (it == values.end()) {
            values.push_back(eigenvalues(i));
            blocks.push_back({static_cast<std::size_t>(i)});
        } else {
            blocks[static_cast<std::size_t>(it - values.begin())].push_back(static_cast<std::size_t>(i));
        }
    }
    return blocks;
}

BasisIsometry build_eigen_isometry(const CovarianceSpec& source,
                                   const std::vector<std::size_t>& permutation,
                                   const std::vector<Matrix>& blockRotations)
{
    const auto n = static_cast<std::size_t>(source.modes());
    require(permutation.size() == n, ErrorCode::MultisetMismatch,
            "permutation length differs from the number of modes");
    std::vector<bool> seen(n, false);
    for (std::size_t p : permutation) {
        require(p < n && !seen[p], ErrorCode::MultisetMismatch, "not a permutation of the source modes");
        seen[p] = true;
    }

    Vector mu(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        mu(static_cast<Eigen::Index>(k)) = source.eigenvalues()(static_cast<Eigen::Index>(permutation[k]));
    }
    const auto blocks = eigenvalue_blocks(mu);
    require(blockRotations.empty() || blockRotations.size() == blocks.size(),
            ErrorCode::BlockShapeMismatch,
            "expected " + std::to_string(blocks.size()) + " block rotations");

    const auto ni = static_cast<Eigen::Index>(n);
    Matrix perm = Matrix::Zero(ni, ni);
    for (std::size_t k = 0; k < n; ++k) {
        perm(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(permutation[k])) = 1.0;
    }
    Matrix rot = Matrix::Identity(ni, ni);
    for (std::size_t b = 0; b < blockRotations.size(); ++b) {
        const Matrix& r = blockRotations[b];
        const auto size = static_cast<Eigen::Index>(blocks[b].size());
        require(r.rows() == size && r.cols() == size, ErrorCode::BlockShapeMismatch,
                "rotation " + std::to_string(b) + " must be " + std::to_string(size) + "x"
                    + std::to_string(size));
        require(gram_deviation(r) <= 1e-12, ErrorCode::NonOrthogonalRotation,
                "rotation " + std::to_string(b) + " is not orthogonal");
        for (Eigen::Index a = 0; a < size; ++a) {
            for (Eigen::Index c = 0; c < size; ++c) {
                rot(static_cast<Eigen::Index>(blocks[b][static_cast<std::size_t>(a)]),
                    static_cast<Eigen::Index>(blocks[b][static_cast<std::size_t>(c)])) = r(a, c);
            }
        }
    }

    BasisIsometry iso;
    iso.kind = IsometryKind::Composed;
    iso.source = source;
    iso.target = make_covariance(mu, IdentityBasis{});
    iso.coordinates = rot * perm;
    iso.permutation = permutation;
    iso.block_rotations = blockRotations;
    return iso;
}

BasisIsometry build_eigen_isometry(const CovarianceSpec& source, const Vector& targetEigenvalues,
                                   const std::vector<Matrix>& blockRotations)
{
    const auto n = source.modes();
    require(targetEigenvalues.size() == n, ErrorCode::MultisetMismatch,
            "target eigenvalue count differs from source");
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    std::vector<std::size_t> permutation;
    permutation.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        bool found = false;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!used[static_cast<std::size_t>(j)] && source.eigenvalues()(j) == targetEigenvalues(k)) {
                used[static_cast<std::size_t>(j)] = true;
                permutation.push_back(static_cast<std::size_t>(j));
                found = true;
                break;
            }
        }
        require(found, ErrorCode::MultisetMismatch,
                "target eigenvalue " + std::to_string(targetEigenvalues(k)) + " has no partner");
    }
    return build_eigen_isometry(source, permutation, blockRotations);
}

BasisIsometry phi_lambda_isometry(const CovarianceSpec& spec)
{
    const auto n = spec.modes();
    BasisIsometry iso;
    iso.kind = IsometryKind::PhiLambda;
    iso.source = spec;
    iso.target = make_covariance(spec.eigenvalues(), IdentityBasis{});
    iso.coordinates = Matrix::Identity(n, n);
    iso.permutation.resize(static_cast<std::size_t>(n));
    std::iota(iso.permutation.begin(), iso.permutation.end(), std::size_t{0});
    return iso;
}

CovarianceSpec equivalent_decomposition(const BasisIsometry& iso)
{
    Matrix basis = iso.source.eigenbasis() * iso.coordinates.transpose();
    return make_covariance_unchecked(iso.target.eigenvalues(), std::move(basis), iso.source.tail_mass());
}

BasisIsometry random_eigen_isometry(const CovarianceSpec& source, std::uint64_t seed)
{
    const auto n = static_cast<std::size_t>(source.modes());
    std::vector<std::size_t> permutation(n);
    std::iota(permutation.begin(), permutation.end(), std::size_t{0});
    CounterRng rng(seed, 0, 0, StreamPurpose::Permutation);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(permutation[i - 1], permutation[rng.below(i)]);
    }
    Vector mu(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        mu(static_cast<Eigen::Index>(k)) = source.eigenvalues()(static_cast<Eigen::Index>(permutation[k]));
    }
    std::vector<Matrix> rotations;
    std::uint64_t blockSeed = seed;
    for (const auto& block : eigenvalue_blocks(mu)) {
        blockSeed = detail::splitmix64(blockSeed);
        rotations.push_back(random_orthogonal(static_cast<int>(block.size()), blockSeed));
    }
    return build_eigen_isometry(source, permutation, rotations);
}

} // namespace itolevy::space
