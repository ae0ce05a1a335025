#include "lcpd/clime.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>
#include <vector>

#include "lcpd/linalg.hpp"

namespace lcpd {

void ClimeConfig::validate() const {
    if (!(lambda >= 0.0)) throw InvalidConfig("clime: lambda must be nonnegative");
    if (!(c >= 0.0)) throw InvalidConfig("clime: c must be nonnegative");
    if (!(lp_tolerance > 0.0 && lp_tolerance <= 1e-4)) throw InvalidConfig("clime: lp_tolerance must lie in (0, 1e-4]");
    if (threads < 1) throw InvalidConfig("clime: threads must be at least 1");
}

double ClimeConfig::lambda_for(Index p, Index n) const {
    if (lambda_rule == LambdaRule::fixed) return lambda;
    return c * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

Matrix sample_covariance(const Matrix& samples, bool center) {
    const Index n = samples.cols();
    if (n < 1) throw InvalidConfig("sample_covariance: need at least one sample");
    Matrix s;
    if (center) {
        const Matrix centered = samples.colwise() - samples.rowwise().mean();
        s = centered * centered.transpose() / static_cast<double>(n);
    } else {
        s = samples * samples.transpose() / static_cast<double>(n);
    }
    return symmetrized(s);
}

Vector clime_column(const Matrix& s_hat, Index j, double lambda, const SimplexOptions& options) {
    const Index p = s_hat.rows();
    require_dims(s_hat.cols() == p && j >= 0 && j < p, "clime_column: bad dimensions");
    if (!(lambda >= 0.0)) throw InvalidConfig("clime_column: lambda must be nonnegative");

    // z = [β⁺; β⁻];  Ŝβ - e_j <= λ  and  -(Ŝβ - e_j) <= λ.
    Matrix a(2 * p, 2 * p);
    a << s_hat, -s_hat, -s_hat, s_hat;
    Vector b = Vector::Constant(2 * p, lambda);
    b(j) += 1.0;
    b(p + j) -= 1.0;
    const Vector c = Vector::Ones(2 * p);

    const LpSolution sol = solve_lp(c, a, b, options);
    const double scale = std::max(1.0, std::abs(sol.objective));
    if (std::abs(sol.duality_gap()) > 1e-8 * scale) {
        throw SolverStall("clime_column: duality gap not closed");
    }
    return sol.x.head(p) - sol.x.tail(p);
}

Matrix symmetrize_min_magnitude(const Matrix& b) {
    require_dims(b.rows() == b.cols(), "symmetrize_min_magnitude: matrix must be square");
    Matrix out = b;
    for (Index j = 0; j < b.cols(); ++j) {
        for (Index i = j + 1; i < b.rows(); ++i) {
            const double v = std::abs(b(i, j)) <= std::abs(b(j, i)) ? b(i, j) : b(j, i);
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

PrecisionEstimate clime_from_covariance(const Matrix& s_hat, double lambda, const ClimeConfig& config) {
    config.validate();
    const Index p = s_hat.rows();
    require_dims(s_hat.cols() == p && p >= 1, "clime: covariance must be square");

    Matrix beta(p, p);
    std::vector<double> gaps(static_cast<std::size_t>(p), 0.0);
    auto solve_range = [&](Index first, Index stride) {
        for (Index j = first; j < p; j += stride) {
            const Vector col = clime_column(s_hat, j, lambda);
            beta.col(j) = col;
            Vector residual = s_hat * col;
            residual(j) -= 1.0;
            gaps[static_cast<std::size_t>(j)] = residual.cwiseAbs().maxCoeff() - lambda;
        }
    };

    const Index workers = std::min<Index>(config.threads, p);
    if (workers <= 1) {
        solve_range(0, 1);
    } else {
        std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
        {
            std::vector<std::jthread> pool;
            for (Index k = 0; k < workers; ++k) {
                pool.emplace_back([&, k] {
                    try {
                        solve_range(k, workers);
                    } catch (...) {
                        failures[static_cast<std::size_t>(k)] = std::current_exception();
                    }
                });
            }
        }
        for (const auto& f : failures) {
            if (f) std::rethrow_exception(f);
        }
    }

    PrecisionEstimate est;
    est.lambda_used = lambda;
    est.feasibility_gap = *std::max_element(gaps.begin(), gaps.end());
    if (est.feasibility_gap > config.lp_tolerance) {
        throw Infeasible("clime: column violates the constraint beyond lp_tolerance");
    }
    est.omega_hat = symmetrize_min_magnitude(beta);
    if (config.psd_project) {
        est.omega_hat = psd_project(est.omega_hat);
        est.psd_projected = true;
    }
    return est;
}

PrecisionEstimate clime_estimate(const Matrix& samples, const ClimeConfig& config) {
    config.validate();
    const Index p = samples.rows();
    const Index n = samples.cols();
    if (p < 1 || n < 2) throw InvalidConfig("clime_estimate: need p >= 1 and N >= 2");
    return clime_from_covariance(sample_covariance(samples, config.center), config.lambda_for(p, n), config);
}

double normalized_error(const Matrix& omega_hat, const Matrix& omega_true) {
    require_dims(omega_hat.rows() == omega_true.rows() && omega_hat.cols() == omega_true.cols(),
                 "normalized_error: dimension mismatch");
    return (omega_hat - omega_true).norm() / omega_true.norm();
}

}  // namespace lcpd
