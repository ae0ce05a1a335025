#pragma once

#include <cmath>
#include <vector>

#include "lcpd/common.hpp"
#include "lcpd/linalg.hpp"
#include "lcpd/precision.hpp"

namespace lcpd {

/// The w most recent p-dimensional observations, one per column, oldest first.
class SampleWindow {
public:
    explicit SampleWindow(Matrix samples);

    [[nodiscard]] Index w() const { return samples_.cols(); }
    [[nodiscard]] Index p() const { return samples_.rows(); }
    [[nodiscard]] const Matrix& samples() const { return samples_; }

private:
    Matrix samples_;
};

/// Ψ_uv = (Ω_uu Ω_vv + Ω_uv²)^{-1/2}: the inverse standard deviation of one
/// entry of a single outer product y yᵀ with y ~ N(0, Ω) (Isserlis).
template <typename Derived>
DenseMatrix<typename Derived::Scalar> scale_matrix(const Eigen::MatrixBase<Derived>& omega) {
    using Scalar = typename Derived::Scalar;
    const auto d = omega.diagonal();
    DenseMatrix<Scalar> psi = (d * d.transpose() + omega.cwiseAbs2()).cwiseSqrt().cwiseInverse();
    return psi;
}

/// Max |m_uv| over the upper triangle including the diagonal.
template <typename Derived>
typename Derived::Scalar upper_sup_norm(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    Scalar best(0);
    for (Index v = 0; v < m.cols(); ++v) {
        for (Index u = 0; u <= v; ++u) best = std::max(best, std::abs(m(u, v)));
    }
    return best;
}

/// Standardized deviation matrix E (or its plug-in version) with its sup-norm.
struct DeviationMatrix {
    Matrix entries;
    double sup_norm = 0.0;
    Index w = 0;
};

/// Σ_r (Ω x_r)(Ω x_r)ᵀ accumulated in sample order.
Matrix transformed_second_moment(const Matrix& omega, const Matrix& samples);

/// (moment_sum - w Ω) / √w ∘ Ψ with its upper-triangle sup-norm.
DeviationMatrix deviation_from_moment(const Matrix& omega, const Matrix& psi, const Matrix& moment_sum, Index w);

/// E_{t,w} for the true pre-change precision.
DeviationMatrix oracle_statistic(const PrecisionMatrix& omega, const SampleWindow& window);

/// Ê_{t,w} for an estimate. Requires a symmetric estimate with positive
/// diagonal; positive definiteness is not required.
DeviationMatrix plugin_statistic(const Matrix& omega_hat, const SampleWindow& window);

/// Δ = (Ω Σ_post Ω - Ω) ∘ Ψ and its sup-norm over all entries.
struct ChangeSignal {
    Matrix entries;
    double sup_norm = 0.0;
};

ChangeSignal change_signal(const PrecisionMatrix& omega_pre, const Matrix& sigma_post);

/// Signed gap in the sufficient detection condition
///     ‖Δ‖∞ >= √(ζ²/w) + c_xi (d_max²/α_min) √(log p / w).
/// c_xi is left to the caller; a positive margin is a diagnostic only.
double detectability_margin(const ChangeSignal& signal, double zeta, Index w, Index p, double d_max,
                            double alpha_min, double c_xi);

/// Ring buffer of the last w samples with the running transformed moment
/// Σ_r y_r y_rᵀ (y = Ω x), updated by one rank-1 add and one rank-1 subtract
/// per sample.
class MomentWindow {
public:
    MomentWindow(Index p, Index w);

    /// Replace the transform Ω (and Ψ) and rebuild the moment from the stored
    /// samples. Requires a positive diagonal.
    void set_transform(const Matrix& omega);

    void push(const Vector& x);
    void clear();

    /// Rebuild the running moment from the stored samples in arrival order.
    void recompute();

    [[nodiscard]] bool full() const { return count_ == w_; }
    [[nodiscard]] Index size() const { return count_; }
    [[nodiscard]] Index w() const { return w_; }
    [[nodiscard]] Index p() const { return p_; }

    /// Stored samples, oldest first (p x size()).
    [[nodiscard]] Matrix samples() const;

    /// Deviation matrix of the current (full) window.
    [[nodiscard]] DeviationMatrix deviation() const;

    /// sup-norm of the current (full) window without materializing E.
    [[nodiscard]] double sup_norm() const;

    [[nodiscard]] const Matrix& moment_sum() const { return moment_; }

private:
    Index p_;
    Index w_;
    Matrix omega_;
    Matrix psi_;
    Matrix xs_;  // ring of raw samples
    Matrix ys_;  // ring of transformed samples
    Matrix moment_;
    Index head_ = 0;  // slot of the oldest sample
    Index count_ = 0;
    Index updates_since_rebuild_ = 0;
};

}  // namespace lcpd
