#include "lcpd/statistic.hpp"

#include <algorithm>
#include <cmath>

namespace lcpd {

namespace {

// Periodic full rebuild of the running moment; bounds cancellation drift.
constexpr Index kRebuildInterval = 4096;

void check_plugin_estimate(const Matrix& omega_hat) {
    require_dims(omega_hat.rows() == omega_hat.cols(), "plug-in estimate must be square");
    if (!(omega_hat.diagonal().array() > 0.0).all()) {
        throw NonPositiveDiagonal("plug-in estimate has a non-positive diagonal entry");
    }
}

void add_outer(Matrix& acc, const Vector& y, double sign) {
    const Index p = y.size();
    for (Index v = 0; v < p; ++v) {
        const double yv = sign * y(v);
        for (Index u = 0; u < p; ++u) acc(u, v) += y(u) * yv;
    }
}

}  // namespace

SampleWindow::SampleWindow(Matrix samples) : samples_(std::move(samples)) {
    require_dims(samples_.rows() > 0 && samples_.cols() > 0, "SampleWindow: need p >= 1 and w >= 1");
}

Matrix transformed_second_moment(const Matrix& omega, const Matrix& samples) {
    require_dims(omega.rows() == samples.rows(), "window dimension does not match the precision matrix");
    const Index p = omega.rows();
    Matrix acc = Matrix::Zero(p, p);
    for (Index r = 0; r < samples.cols(); ++r) {
        const Vector x = samples.col(r);
        const Vector y = omega * x;
        add_outer(acc, y, 1.0);
    }
    return acc;
}

DeviationMatrix deviation_from_moment(const Matrix& omega, const Matrix& psi, const Matrix& moment_sum, Index w) {
    const double wd = static_cast<double>(w);
    DeviationMatrix out;
    out.w = w;
    out.entries = ((moment_sum - wd * omega) / std::sqrt(wd)).cwiseProduct(psi);
    out.sup_norm = upper_sup_norm(out.entries);
    return out;
}

DeviationMatrix oracle_statistic(const PrecisionMatrix& omega, const SampleWindow& window) {
    require_dims(window.p() == omega.p(), "oracle_statistic: window dimension does not match omega");
    const Matrix& m = omega.entries();
    return deviation_from_moment(m, scale_matrix(m), transformed_second_moment(m, window.samples()), window.w());
}

DeviationMatrix plugin_statistic(const Matrix& omega_hat, const SampleWindow& window) {
    check_plugin_estimate(omega_hat);
    require_dims(window.p() == omega_hat.rows(), "plugin_statistic: window dimension does not match estimate");
    return deviation_from_moment(omega_hat, scale_matrix(omega_hat),
                                 transformed_second_moment(omega_hat, window.samples()), window.w());
}

ChangeSignal change_signal(const PrecisionMatrix& omega_pre, const Matrix& sigma_post) {
    require_dims(sigma_post.rows() == omega_pre.p() && sigma_post.cols() == omega_pre.p(),
                 "change_signal: dimension mismatch");
    const Matrix& omega = omega_pre.entries();
    ChangeSignal out;
    out.entries = (omega * sigma_post * omega - omega).cwiseProduct(scale_matrix(omega));
    out.sup_norm = max_abs(out.entries);
    return out;
}

double detectability_margin(const ChangeSignal& signal, double zeta, Index w, Index p, double d_max,
                            double alpha_min, double c_xi) {
    if (w < 1) throw InvalidConfig("detectability_margin: w must be positive");
    const double wd = static_cast<double>(w);
    const double noise = std::sqrt(zeta * zeta / wd);
    const double estimation = c_xi * (d_max * d_max / alpha_min) * std::sqrt(std::log(static_cast<double>(p)) / wd);
    return signal.sup_norm - noise - estimation;
}

MomentWindow::MomentWindow(Index p, Index w)
    : p_(p),
      w_(w),
      omega_(Matrix::Identity(p, p)),
      psi_(scale_matrix(omega_)),
      xs_(p, w),
      ys_(p, w),
      moment_(Matrix::Zero(p, p)) {
    if (p < 1 || w < 1) throw InvalidConfig("MomentWindow: need p >= 1 and w >= 1");
}

void MomentWindow::set_transform(const Matrix& omega) {
    check_plugin_estimate(omega);
    require_dims(omega.rows() == p_, "MomentWindow: transform dimension mismatch");
    omega_ = omega;
    psi_ = scale_matrix(omega_);
    for (Index k = 0; k < count_; ++k) {
        const Index slot = (head_ + k) % w_;
        const Vector x = xs_.col(slot);
        ys_.col(slot) = omega_ * x;
    }
    recompute();
}

void MomentWindow::push(const Vector& x) {
    require_dims(x.size() == p_, "MomentWindow: sample dimension mismatch");
    const Vector y = omega_ * x;
    Index slot;
    if (count_ == w_) {
        slot = head_;
        const Vector oldest = ys_.col(slot);
        add_outer(moment_, oldest, -1.0);
        head_ = (head_ + 1) % w_;
    } else {
        slot = (head_ + count_) % w_;
        ++count_;
    }
    xs_.col(slot) = x;
    ys_.col(slot) = y;
    add_outer(moment_, y, 1.0);
    if (++updates_since_rebuild_ >= kRebuildInterval) recompute();
}

void MomentWindow::clear() {
    head_ = 0;
    count_ = 0;
    moment_.setZero();
    updates_since_rebuild_ = 0;
}

void MomentWindow::recompute() {
    moment_.setZero();
    for (Index k = 0; k < count_; ++k) {
        const Vector y = ys_.col((head_ + k) % w_);
        add_outer(moment_, y, 1.0);
    }
    updates_since_rebuild_ = 0;
}

Matrix MomentWindow::samples() const {
    Matrix out(p_, count_);
    for (Index k = 0; k < count_; ++k) out.col(k) = xs_.col((head_ + k) % w_);
    return out;
}

DeviationMatrix MomentWindow::deviation() const { return deviation_from_moment(omega_, psi_, moment_, count_); }

double MomentWindow::sup_norm() const {
    const double wd = static_cast<double>(count_);
    double best = 0.0;
    for (Index v = 0; v < p_; ++v) {
        for (Index u = 0; u <= v; ++u) {
            const double e = ((moment_(u, v) - wd * omega_(u, v)) / std::sqrt(wd)) * psi_(u, v);
            best = std::max(best, std::abs(e));
        }
    }
    return best;
}

}  // namespace lcpd
