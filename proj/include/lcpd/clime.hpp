#pragma once

#include "lcpd/common.hpp"
#include "lcpd/simplex.hpp"

namespace lcpd {

enum class LambdaRule {
    fixed,   // lambda used as given
    scaled,  // lambda = c * sqrt(log p / N)
};

struct ClimeConfig {
    double lambda = 0.0;
    LambdaRule lambda_rule = LambdaRule::scaled;
    double c = 0.6;
    bool psd_project = true;
    double lp_tolerance = 1e-7;
    bool center = false;
    int threads = 1;

    void validate() const;
    [[nodiscard]] double lambda_for(Index p, Index n) const;
};

struct PrecisionEstimate {
    Matrix omega_hat;
    double lambda_used = 0.0;
    double feasibility_gap = 0.0;  // max_j (‖Ŝβ_j - e_j‖∞ - λ)
    bool psd_projected = false;
};

/// (1/N) Σ x xᵀ over the columns of `samples` (p x N).
Matrix sample_covariance(const Matrix& samples, bool center = false);

/// argmin ‖β‖₁ s.t. ‖Ŝβ - e_j‖∞ <= λ. Throws Infeasible or SolverStall.
Vector clime_column(const Matrix& s_hat, Index j, double lambda, const SimplexOptions& options = {});

/// Column-wise CLIME on the samples (p x N), smaller-magnitude symmetrization
/// and optional projection onto the PSD cone.
PrecisionEstimate clime_estimate(const Matrix& samples, const ClimeConfig& config);

/// Same, from a precomputed covariance and an explicit lambda.
PrecisionEstimate clime_from_covariance(const Matrix& s_hat, double lambda, const ClimeConfig& config);

/// Keep, for every pair, the entry of smaller magnitude from B and Bᵀ.
Matrix symmetrize_min_magnitude(const Matrix& b);

/// ‖Ω̂ - Ω‖_F / ‖Ω‖_F.
double normalized_error(const Matrix& omega_hat, const Matrix& omega_true);

}  // namespace lcpd
