#include "lcpd/precision.hpp"

#include <algorithm>
#include <cmath>

#include "lcpd/linalg.hpp"

namespace lcpd {

PrecisionMatrix::PrecisionMatrix(const Matrix& m) {
    require_dims(m.rows() == m.cols() && m.rows() > 0, "PrecisionMatrix: matrix must be square and non-empty");
    if (!is_symmetric(m, 1e-10)) {
        throw NotPositiveDefinite("PrecisionMatrix: matrix is not symmetric");
    }
    entries_ = symmetrized(m);
    Eigen::LLT<Matrix> llt(entries_);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("PrecisionMatrix: matrix is not positive definite");
    }
    const Matrix sigma = llt.solve(Matrix::Identity(p(), p()));
    unit_variance_ = (sigma.diagonal().array() - 1.0).abs().maxCoeff() <= 1e-10;
    unit_diag_ = (entries_.diagonal().array() == 1.0).all();
}

Matrix PrecisionMatrix::covariance() const { return invert_spd(entries_); }

Matrix PrecisionMatrix::covariance_factor() const { return cholesky_factor(covariance()); }

AssumptionReport assess(const PrecisionMatrix& omega, double zero_tol) {
    const Matrix& m = omega.entries();
    const Index p = omega.p();
    AssumptionReport report;
    for (Index i = 0; i < p; ++i) {
        Index support = 0;
        for (Index j = 0; j < p; ++j) {
            if (std::abs(m(i, j)) > zero_tol) ++support;
        }
        report.d_max_observed = std::max(report.d_max_observed, support);
    }
    report.lambda_min = min_eigenvalue(m);
    for (Index i = 0; i < p; ++i) {
        for (Index j = i + 1; j < p; ++j) {
            const double r = std::abs(m(i, j)) / std::sqrt(m(i, i) * m(j, j));
            report.r_max_observed = std::max(report.r_max_observed, r);
        }
    }
    return report;
}

Matrix standardize_precision(const Matrix& omega) {
    const Matrix sigma = invert_spd(omega);
    const Vector scale = sigma.diagonal().cwiseSqrt();
    Matrix out = scale.asDiagonal() * omega * scale.asDiagonal();
    return symmetrized(out);
}

}  // namespace lcpd
