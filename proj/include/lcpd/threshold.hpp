#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lcpd/common.hpp"

namespace lcpd {

/// Tail of the standardized inner product ϑ_w = <X, Y>/√w of two independent
/// standard Gaussian w-vectors.
///
/// Conditionally on X, <X, Y> ~ N(0, ‖X‖²), so
///     P(|ϑ_w| >= t) = E[ 2 Φ̄(t √w / V) ],  V = ‖X‖ ~ χ_w.
/// The expectation is a fixed composite Gauss–Legendre rule over the χ_w
/// density between its 1e-12 and 1 - 1e-12 quantiles. The panel count is
/// doubled until two successive rules agree to 1e-12 relative on a probe grid,
/// so evaluation is a smooth function of t.
class ThetaTail {
public:
    explicit ThetaTail(Index w);

    /// P(|ϑ_w| >= t) for t >= 0.
    [[nodiscard]] double operator()(double t) const;

    [[nodiscard]] Index w() const { return w_; }
    [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }

private:
    Index w_;
    std::vector<double> nodes_;    // values of V
    std::vector<double> weights_;  // density * quadrature weight, normalized to sum 1
};

/// Shared, lazily built table for `w` (thread-safe).
std::shared_ptr<const ThetaTail> theta_tail_table(Index w);

/// P(|ϑ_w| >= t).
double theta_tail(Index w, double t);

enum class ThresholdMethod { exact, asymptotic, union_bound };

std::string to_string(ThresholdMethod method);
ThresholdMethod parse_threshold_method(const std::string& text);

/// Per-entry tail target (2/(p(p+1))) log(1/(1-π0)).
double exact_tail_target(double pi0, Index p);

/// ζ solving P(|ϑ_w| >= ζ) = exact_tail_target(π0, p).
double critical_value_exact(double pi0, Index p, Index w);

/// ζ² = 2 log C - log log C - 2 log(√π log(1/(1-π0))), C = binom(p+1, 2).
double critical_value_asymptotic(double pi0, Index p);

/// ζ² = 2 log C - log log C - 2 log(2√π log(1/(1-π0/2))), for π0 < 1/2.
double critical_value_union(double pi0, Index p);

/// Critical-value request (π0, p, w, method) and, once resolved, ζ.
struct ThresholdSpec {
    double pi0 = 0.05;
    Index p = 0;
    Index w = 0;
    ThresholdMethod method = ThresholdMethod::exact;
    std::optional<double> zeta;

    [[nodiscard]] bool resolved() const { return zeta.has_value(); }
};

/// Copy of `spec` with ζ computed by its method.
ThresholdSpec resolve(ThresholdSpec spec);

}  // namespace lcpd
