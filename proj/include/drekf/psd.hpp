#pragma once

// Dense symmetric / PSD kernel: square roots, Bures and Gelbrich distances,
// Schur-complement tests and Gaussian sampling. Everything is templated on
// the scalar type; the library itself instantiates double.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "drekf/errors.hpp"

namespace drekf {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat = MatrixX<double>;
using Vec = VectorX<double>;

/// Eigenvalues in [-kTolPsd * ||A||_2, 0) are clamped to zero; anything more
/// negative is rejected.
inline constexpr double kTolPsd = 1e-9;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& a) {
    return a.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& a, const char* what) {
    if (!a.allFinite()) throw NumericInputError(std::string(what) + " has non-finite entries");
}

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& a, const char* what) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw DimensionError(std::string(what) + " must be square and non-empty, got " +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
}

/// (A + A^T) / 2, evaluated.
template <typename Derived>
MatrixX<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& a) {
    MatrixX<typename Derived::Scalar> s = (a + a.transpose()) / typename Derived::Scalar(2);
    return s;
}

template <typename Derived>
typename Derived::Scalar min_eigenvalue(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(symmetrize(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

template <typename Derived>
typename Derived::Scalar max_eigenvalue(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(symmetrize(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(es.eigenvalues().size() - 1);
}

/// Spectral norm (largest singular value).
template <typename Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    if (a.size() == 0) return Scalar(0);
    Eigen::JacobiSVD<MatrixX<Scalar>> svd(a.eval());
    return svd.singularValues()(0);
}

/// Symmetric matrix with exactly mirrored storage.
template <typename Scalar>
class SymMatrix {
public:
    /// Accepts matrices whose asymmetry is at rounding level and mirrors them.
    explicit SymMatrix(const MatrixX<Scalar>& a) {
        require_square(a, "symmetric matrix");
        require_finite(a, "symmetric matrix");
        const Scalar scale = std::max(Scalar(1), a.cwiseAbs().maxCoeff());
        if ((a - a.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-8) * scale) {
            throw NotPsdError("matrix is not symmetric");
        }
        m_ = symmetrize(a);
    }

    Eigen::Index dim() const { return m_.rows(); }
    const MatrixX<Scalar>& matrix() const { return m_; }
    operator const MatrixX<Scalar>&() const { return m_; }

private:
    MatrixX<Scalar> m_;
};

/// Symmetric positive semidefinite matrix. Slightly negative eigenvalues are
/// clamped to zero at construction.
template <typename Scalar>
class PsdMatrix {
public:
    PsdMatrix() = default;

    explicit PsdMatrix(const MatrixX<Scalar>& a, Scalar tol = Scalar(kTolPsd))
        : eig_floor_(tol) {
        SymMatrix<Scalar> s(a);
        Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(s.matrix());
        const auto& lam = es.eigenvalues();
        const Scalar norm = std::max(std::abs(lam(0)), std::abs(lam(lam.size() - 1)));
        if (lam(0) < -tol * norm) {
            throw NotPsdError("matrix has eigenvalue " + std::to_string(double(lam(0))) +
                              " below the PSD tolerance");
        }
        if (lam(0) < Scalar(0)) {
            VectorX<Scalar> clamped = lam.cwiseMax(Scalar(0));
            m_ = symmetrize(es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose());
        } else {
            m_ = s.matrix();
        }
    }

    static PsdMatrix identity(Eigen::Index n) { return PsdMatrix(MatrixX<Scalar>::Identity(n, n)); }

    template <typename Derived>
    static PsdMatrix diagonal(const Eigen::MatrixBase<Derived>& d) {
        return PsdMatrix(MatrixX<Scalar>(d.asDiagonal()));
    }

    Eigen::Index dim() const { return m_.rows(); }
    Scalar eig_floor() const { return eig_floor_; }
    Scalar trace() const { return m_.trace(); }
    const MatrixX<Scalar>& matrix() const { return m_; }
    operator const MatrixX<Scalar>&() const { return m_; }

private:
    MatrixX<Scalar> m_;
    Scalar eig_floor_ = Scalar(kTolPsd);
};

using PsdMatrixd = PsdMatrix<double>;

/// Principal square root through the symmetric eigendecomposition. Negative
/// eigenvalues (rounding noise) are treated as zero.
template <typename Derived>
MatrixX<typename Derived::Scalar> sqrtm_psd(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    require_finite(a, "matrix_sqrt input");
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(symmetrize(a));
    VectorX<Scalar> root = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
    return symmetrize(es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose());
}

template <typename Scalar>
PsdMatrix<Scalar> matrix_sqrt(const PsdMatrix<Scalar>& a) {
    return PsdMatrix<Scalar>(sqrtm_psd(a.matrix()));
}

namespace detail {

// ||a^{1/2} - b^{1/2} U||_F with U the orthogonal polar factor of
// b^{1/2} a^{1/2}; equals the Bures distance without the cancellation of the
// trace formula.
template <typename Scalar>
Scalar bures_one_sided(const MatrixX<Scalar>& root_a, const MatrixX<Scalar>& root_b) {
    Eigen::JacobiSVD<MatrixX<Scalar>> svd(root_b * root_a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    MatrixX<Scalar> u = svd.matrixU() * svd.matrixV().transpose();
    return (root_a - root_b * u).norm();
}

}  // namespace detail

/// Bures distance sqrt(Tr a + Tr b - 2 Tr (b^{1/2} a b^{1/2})^{1/2}).
/// Exactly symmetric in its arguments.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar bures_distance(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = typename DerivedA::Scalar;
    require_square(a, "bures_distance lhs");
    require_square(b, "bures_distance rhs");
    if (a.rows() != b.rows()) throw DimensionError("bures_distance: dimension mismatch");
    const MatrixX<Scalar> ra = sqrtm_psd(a);
    const MatrixX<Scalar> rb = sqrtm_psd(b);
    const Scalar d_ab = detail::bures_one_sided<Scalar>(ra, rb);
    const Scalar d_ba = detail::bures_one_sided<Scalar>(rb, ra);
    return (d_ab + d_ba) / Scalar(2);
}

template <typename Scalar>
Scalar bures_distance(const PsdMatrix<Scalar>& a, const PsdMatrix<Scalar>& b) {
    return bures_distance(a.matrix(), b.matrix());
}

/// Fidelity term Tr (b^{1/2} a b^{1/2})^{1/2} from the trace formula. Used where
/// the Bures constraint is audited in its semidefinite (trace) form.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar bures_fidelity(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = typename DerivedA::Scalar;
    const MatrixX<Scalar> rb = sqrtm_psd(b);
    return sqrtm_psd((rb * a * rb).eval()).trace();
}

/// Gaussian law N(mean, cov).
template <typename Scalar>
class GaussianLaw {
public:
    GaussianLaw(VectorX<Scalar> mean, PsdMatrix<Scalar> cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
        require_finite(mean_, "Gaussian mean");
        if (mean_.size() != cov_.dim()) {
            throw DimensionError("Gaussian law: mean length " + std::to_string(mean_.size()) +
                                 " does not match covariance dimension " + std::to_string(cov_.dim()));
        }
    }

    Eigen::Index dim() const { return mean_.size(); }
    const VectorX<Scalar>& mean() const { return mean_; }
    const PsdMatrix<Scalar>& cov() const { return cov_; }

private:
    VectorX<Scalar> mean_;
    PsdMatrix<Scalar> cov_;
};

using GaussianLawd = GaussianLaw<double>;

/// Type-2 Wasserstein distance between Gaussians (Gelbrich form).
template <typename Scalar>
Scalar gelbrich_distance(const GaussianLaw<Scalar>& p, const GaussianLaw<Scalar>& q) {
    if (p.dim() != q.dim()) throw DimensionError("gelbrich_distance: dimension mismatch");
    const Scalar dm = (p.mean() - q.mean()).squaredNorm();
    const Scalar b = bures_distance(p.cov(), q.cov());
    return std::sqrt(dm + b * b);
}

/// True iff [[b11, b12], [b12^T, b22]] has minimum eigenvalue >= -tol.
template <typename D11, typename D12, typename D22>
bool schur_psd_check(const Eigen::MatrixBase<D11>& b11, const Eigen::MatrixBase<D12>& b12,
                     const Eigen::MatrixBase<D22>& b22, typename D11::Scalar tol) {
    using Scalar = typename D11::Scalar;
    require_square(b11, "schur block 11");
    require_square(b22, "schur block 22");
    if (b12.rows() != b11.rows() || b12.cols() != b22.rows()) {
        throw DimensionError("schur_psd_check: off-diagonal block is not conformable");
    }
    const Eigen::Index n = b11.rows(), m = b22.rows();
    MatrixX<Scalar> full(n + m, n + m);
    full << b11, b12, b12.transpose(), b22;
    return min_eigenvalue(full) >= -tol;
}

/// Draws mean + cov^{1/2} z with z standard normal from `rng`.
template <typename Scalar, typename Urbg>
VectorX<Scalar> sample_gaussian(const GaussianLaw<Scalar>& law, Urbg& rng) {
    std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
    VectorX<Scalar> z(law.dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    return law.mean() + sqrtm_psd(law.cov().matrix()) * z;
}

/// Same as sample_gaussian with a precomputed square root (hot loops).
template <typename Scalar, typename Urbg>
VectorX<Scalar> sample_with_root(const VectorX<Scalar>& mean, const MatrixX<Scalar>& root, Urbg& rng) {
    std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
    VectorX<Scalar> z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    return mean + root * z;
}

/// Block-diagonal assembly diag(a, b).
template <typename DA, typename DB>
MatrixX<typename DA::Scalar> block_diag(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
    using Scalar = typename DA::Scalar;
    MatrixX<Scalar> out = MatrixX<Scalar>::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

}  // namespace drekf
