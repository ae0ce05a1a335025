#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "lcpd/common.hpp"

namespace lcpd {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Largest absolute entry; zero for an empty matrix.
template <typename Derived>
typename Derived::Scalar max_abs(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    return m.size() == 0 ? Scalar(0) : m.cwiseAbs().maxCoeff();
}

/// True when |m - m^T| <= rel_tol * max|m| entry-wise.
template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar rel_tol) {
    if (m.rows() != m.cols()) return false;
    const auto scale = std::max(max_abs(m), typename Derived::Scalar(1e-300));
    return max_abs(m - m.transpose()) <= rel_tol * scale;
}

/// (m + m^T) / 2, which is bit-exactly symmetric.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    DenseMatrix<Scalar> out = m;
    const Index n = out.rows();
    for (Index j = 0; j < n; ++j) {
        for (Index i = j + 1; i < n; ++i) {
            const Scalar v = (out(i, j) + out(j, i)) / Scalar(2);
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

/// Lower-triangular L with L L^T = m. Throws NotPositiveDefinite when a pivot
/// is not strictly positive.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> cholesky_factor(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    require_dims(m.rows() == m.cols(), "cholesky_factor: matrix is not square");
    if (!is_symmetric(m, Scalar(1e-10))) {
        throw NotPositiveDefinite("cholesky_factor: matrix is not symmetric");
    }
    Eigen::LLT<DenseMatrix<Scalar>> llt(m.derived());
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("cholesky_factor: non-positive pivot");
    }
    DenseMatrix<Scalar> lower = llt.matrixL();
    return lower;
}

/// Inverse of a symmetric positive-definite matrix, symmetrized by averaging.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> invert_spd(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    require_dims(m.rows() == m.cols(), "invert_spd: matrix is not square");
    Eigen::LLT<DenseMatrix<Scalar>> llt(m.derived());
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("invert_spd: matrix is not positive definite");
    }
    const DenseMatrix<Scalar> inv = llt.solve(DenseMatrix<Scalar>::Identity(m.rows(), m.cols()));
    return symmetrized(inv);
}

template <typename Scalar>
struct SymEig {
    DenseVector<Scalar> values;   // ascending
    DenseMatrix<Scalar> vectors;  // column i pairs with values(i)
};

/// Eigen-decomposition of a symmetric matrix (ascending eigenvalues).
template <typename Derived>
SymEig<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    require_dims(m.rows() == m.cols(), "sym_eig: matrix is not square");
    Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> solver(m.derived());
    if (solver.info() != Eigen::Success) {
        throw NoConvergence("sym_eig: eigen-solver did not converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Smallest eigenvalue of a symmetric matrix.
template <typename Derived>
typename Derived::Scalar min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> solver(m.derived(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NoConvergence("min_eigenvalue: eigen-solver did not converge");
    }
    return solver.eigenvalues()(0);
}

/// Projection onto the positive-semidefinite cone: reconstruct from the
/// eigenpairs with nonnegative eigenvalues only.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> psd_project(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    const auto eig = sym_eig(m);
    const DenseVector<Scalar> kept = eig.values.cwiseMax(Scalar(0));
    const DenseMatrix<Scalar> out = eig.vectors * kept.asDiagonal() * eig.vectors.transpose();
    return symmetrized(out);
}

}  // namespace lcpd
