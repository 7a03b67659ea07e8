#pragma once

// Closed-form ridge machinery for one-vs-all part classifiers.
//
// Data matrices hold one descriptor per row (n samples x k features). A
// classifier bank is k x n: column j separates sample j from every other row.
// All routines use the closed-form regularization convention
//     (D^T D + lambda I_k) C = D^T
// and are pure functions of their arguments.

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "cotrack/error.hpp"

namespace cotrack::linalg {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
    if (!m.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

template <typename Scalar>
void require_lambda(Scalar lambda) {
    if (!(lambda > Scalar(0)) || !std::isfinite(static_cast<double>(lambda)))
        throw InvalidInput("ridge: lambda must be a positive finite number");
}

// Lower Cholesky factor; throws NumericalError carrying the pivot index on breakdown.
template <typename Scalar>
Mat<Scalar> cholesky_lower(const Mat<Scalar>& a) {
    const Eigen::Index p = a.rows();
    const Scalar scale = a.diagonal().cwiseAbs().maxCoeff();
    const Scalar floor = Scalar(p) * Eigen::NumTraits<Scalar>::epsilon() * scale;
    Mat<Scalar> l = Mat<Scalar>::Zero(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const Scalar pivot = a(j, j) - l.row(j).head(j).squaredNorm();
        if (!(pivot > floor)) {
            throw NumericalError("spd_solve: matrix not positive definite at pivot " +
                                     std::to_string(j),
                                 static_cast<int>(j));
        }
        const Scalar ljj = std::sqrt(pivot);
        l(j, j) = ljj;
        const Eigen::Index rest = p - j - 1;
        if (rest > 0) {
            l.col(j).tail(rest) =
                (a.col(j).tail(rest) - l.block(j + 1, 0, rest, j) * l.row(j).head(j).transpose()) /
                ljj;
        }
    }
    return l;
}

}  // namespace detail

/// Solves A X = B for symmetric positive definite A.
template <typename DerivedA, typename DerivedB>
Mat<typename DerivedA::Scalar> spd_solve(const Eigen::MatrixBase<DerivedA>& A,
                                         const Eigen::MatrixBase<DerivedB>& B) {
    using Scalar = typename DerivedA::Scalar;
    if (A.rows() < 1 || A.rows() != A.cols())
        throw InvalidInput("spd_solve: A must be square and non-empty");
    if (B.rows() != A.rows()) throw InvalidInput("spd_solve: row count of B must match A");
    detail::require_finite(A, "spd_solve A");
    detail::require_finite(B, "spd_solve B");

    const Mat<Scalar> a = A;
    const Scalar amax = a.cwiseAbs().maxCoeff();
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-9) * std::max(Scalar(1), amax))
        throw InvalidInput("spd_solve: A is not symmetric");

    const Mat<Scalar> l = detail::cholesky_lower(a);
    Mat<Scalar> x = l.template triangularView<Eigen::Lower>().solve(B.template cast<Scalar>());
    l.transpose().template triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
}

/// C = (D^T D + lambda I_k)^{-1} D^T, factoring the k x k Gram matrix.
template <typename Derived>
Mat<typename Derived::Scalar> ridge_primal(const Eigen::MatrixBase<Derived>& D,
                                           typename Derived::Scalar lambda) {
    using Scalar = typename Derived::Scalar;
    detail::require_lambda(lambda);
    detail::require_finite(D, "ridge D");
    if (D.rows() < 1 || D.cols() < 1) throw InvalidInput("ridge: empty data matrix");
    Mat<Scalar> gram = D.transpose() * D;
    gram.diagonal().array() += lambda;
    return spd_solve(gram, D.transpose());
}

/// C = D^T (D D^T + lambda I_n)^{-1}, factoring the n x n Gram matrix.
template <typename Derived>
Mat<typename Derived::Scalar> ridge_dual(const Eigen::MatrixBase<Derived>& D,
                                         typename Derived::Scalar lambda) {
    using Scalar = typename Derived::Scalar;
    detail::require_lambda(lambda);
    detail::require_finite(D, "ridge D");
    if (D.rows() < 1 || D.cols() < 1) throw InvalidInput("ridge: empty data matrix");
    Mat<Scalar> gram = D * D.transpose();
    gram.diagonal().array() += lambda;
    // G symmetric: D^T G^{-1} = (G^{-1} D)^T.
    return spd_solve(gram, D).transpose();
}

/// One-vs-all bank through whichever Gram matrix is smaller.
template <typename Derived>
Mat<typename Derived::Scalar> ridge(const Eigen::MatrixBase<Derived>& D,
                                    typename Derived::Scalar lambda) {
    return D.rows() <= D.cols() ? ridge_dual(D, lambda) : ridge_primal(D, lambda);
}

/// Weighted one-vs-all solution for sample `index` (0-based).
///
/// Negatives carry weight 1 and the positive sample carries total weight
/// `omega` >= 1, i.e. solves (D^T W D + lambda I) theta = D^T W e_index with
/// W = I + (omega - 1) e_index e_index^T. Only used to verify the rescaling
/// identity; the tracker never calls it.
template <typename Derived>
Vec<typename Derived::Scalar> ridge_weighted(const Eigen::MatrixBase<Derived>& D,
                                             Eigen::Index index,
                                             typename Derived::Scalar omega,
                                             typename Derived::Scalar lambda) {
    using Scalar = typename Derived::Scalar;
    detail::require_lambda(lambda);
    detail::require_finite(D, "ridge D");
    if (index < 0 || index >= D.rows()) throw InvalidInput("ridge_weighted: index out of range");
    if (!(omega >= Scalar(1)) || !std::isfinite(static_cast<double>(omega)))
        throw InvalidInput("ridge_weighted: omega must be >= 1");
    const Vec<Scalar> d = D.row(index).transpose();
    Mat<Scalar> lhs = D.transpose() * D;
    lhs.noalias() += (omega - Scalar(1)) * d * d.transpose();
    lhs.diagonal().array() += lambda;
    return spd_solve(lhs, (omega * d).eval());
}

/// q such that the weighted solution equals q times the unweighted one:
/// q = omega / (1 + (omega - 1) * dot), dot = d_i^T c_i.
template <typename Scalar>
Scalar rescale_factor(Scalar omega, Scalar dot) {
    const Scalar denom = Scalar(1) + (omega - Scalar(1)) * dot;
    if (!std::isfinite(static_cast<double>(denom)) || std::abs(denom) <= Scalar(1e-12))
        throw NumericalError("rescale_factor: singular denominator");
    return omega / denom;
}

}  // namespace cotrack::linalg
