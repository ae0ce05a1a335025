#pragma once

namespace lcpd {

/// Upper tail of the standard normal, Φ̄(x) = erfc(x/√2)/2.
double normal_sf(double x);

/// Regularized lower incomplete gamma P(a, x) = γ(a, x)/Γ(a).
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed
/// without cancellation.
double gamma_q(double a, double x);

/// CDF of the chi-square distribution with `dof` degrees of freedom.
double chi_square_cdf(double dof, double x);

/// Survival function of the chi-square distribution.
double chi_square_sf(double dof, double x);

/// x with chi_square_cdf(dof, x) = prob, by bisection. `prob` in (0, 1).
double chi_square_quantile(double dof, double prob);

/// x with chi_square_sf(dof, x) = prob, by bisection. `prob` in (0, 1).
double chi_square_upper_quantile(double dof, double prob);

}  // namespace lcpd
