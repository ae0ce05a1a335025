#pragma once

#include "lcpd/common.hpp"

namespace lcpd {

/// Symmetric positive-definite precision matrix of a Gaussian graphical model.
///
/// Construction symmetrizes the input by averaging (so entries are bit-equal
/// across the diagonal) and verifies positive definiteness with a Cholesky
/// factorization. Instances are immutable.
class PrecisionMatrix {
public:
    /// Throws NotPositiveDefinite if `m` is asymmetric beyond 1e-10 relative
    /// or fails the Cholesky check.
    explicit PrecisionMatrix(const Matrix& m);

    [[nodiscard]] Index p() const { return entries_.rows(); }
    [[nodiscard]] const Matrix& entries() const { return entries_; }
    [[nodiscard]] double operator()(Index i, Index j) const { return entries_(i, j); }

    /// Diagonal of the implied covariance is all ones (within 1e-10).
    [[nodiscard]] bool is_unit_variance() const { return unit_variance_; }
    /// Diagonal of the precision matrix itself is all ones.
    [[nodiscard]] bool is_unit_diag() const { return unit_diag_; }

    /// Σ = Ω⁻¹.
    [[nodiscard]] Matrix covariance() const;

    /// Lower Cholesky factor of the covariance, for sampling.
    [[nodiscard]] Matrix covariance_factor() const;

private:
    Matrix entries_;
    bool unit_variance_ = false;
    bool unit_diag_ = false;
};

/// Observed values of the structural constants of the model class:
/// maximum row support, smallest eigenvalue, largest standardized
/// off-diagonal magnitude.
struct AssumptionReport {
    Index d_max_observed = 0;
    double lambda_min = 0.0;
    double r_max_observed = 0.0;
};

/// Support counts treat |Ω_ij| <= zero_tol as structural zeros.
AssumptionReport assess(const PrecisionMatrix& omega, double zero_tol = 1e-12);

/// D^{1/2} Ω D^{1/2} with D = diag(Ω⁻¹): the precision matrix of the same
/// model rescaled to unit-variance nodes. Sparsity is preserved exactly.
Matrix standardize_precision(const Matrix& omega);

}  // namespace lcpd
