#include "lcpd/modelgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "lcpd/linalg.hpp"

namespace lcpd {

namespace {

double draw_weight(std::mt19937_64& engine, const SparseGenOptions& options) {
    std::uniform_real_distribution<double> magnitude(options.weight_lo, options.weight_hi);
    std::bernoulli_distribution negative(0.5);
    const double v = magnitude(engine);
    return negative(engine) ? -v : v;
}

// Diagonal shift to |λ_min(A)| + inflation, then optional standardization.
PrecisionMatrix finish_sparse(Matrix offdiag, const SparseGenOptions& options) {
    if (options.diag_inflation < 0.0) throw InvalidConfig("diag_inflation must be nonnegative");
    const double lambda_min = offdiag.rows() > 0 ? min_eigenvalue(offdiag) : 0.0;
    const double diag = std::max(0.0, -lambda_min) + options.diag_inflation;
    offdiag.diagonal().setConstant(diag);
    Eigen::LLT<Matrix> llt(offdiag);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("generated precision is not positive definite; raise diag_inflation");
    }
    if (!options.standardize) return PrecisionMatrix(offdiag);
    return PrecisionMatrix(standardize_precision(offdiag));
}

}  // namespace

PrecisionMatrix gen_chain_precision(Index p, double rho0) {
    if (p < 1) throw InvalidConfig("gen_chain_precision: p must be positive");
    if (std::abs(rho0) > 0.5 + 1e-12) {
        throw InvalidConfig("gen_chain_precision: |rho0| must not exceed 0.5");
    }
    Matrix m = Matrix::Identity(p, p);
    for (Index i = 0; i + 1 < p; ++i) {
        m(i, i + 1) = rho0;
        m(i + 1, i) = rho0;
    }
    return PrecisionMatrix(m);
}

PrecisionMatrix gen_random_sparse(Index p, double row_density, std::uint64_t seed,
                                  const SparseGenOptions& options, bool count_diagonal) {
    if (p < 1) throw InvalidConfig("gen_random_sparse: p must be positive");
    if (row_density < 0.0 || row_density > 1.0) {
        throw InvalidConfig("gen_random_sparse: row_density must lie in [0, 1]");
    }
    if (row_density > 0.0 && row_density * static_cast<double>(p) < 1.0) {
        throw InvalidConfig("gen_random_sparse: row_density * p must be at least 1");
    }
    double degree = row_density * static_cast<double>(p);
    if (count_diagonal) degree = std::max(0.0, degree - 1.0);
    const double edge_prob = p > 1 ? std::min(1.0, degree / static_cast<double>(p - 1)) : 0.0;

    std::mt19937_64 engine(mix64(seed));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix a = Matrix::Zero(p, p);
    for (Index i = 0; i < p; ++i) {
        for (Index j = i + 1; j < p; ++j) {
            if (unit(engine) < edge_prob) {
                const double v = draw_weight(engine, options);
                a(i, j) = v;
                a(j, i) = v;
            }
        }
    }
    return finish_sparse(std::move(a), options);
}

PrecisionMatrix gen_hub_precision(Index p, Index n_hubs, Index spokes_per_hub, std::uint64_t seed,
                                  const SparseGenOptions& options) {
    if (p < 1 || n_hubs < 0 || spokes_per_hub < 0) throw InvalidConfig("gen_hub_precision: bad sizes");
    if (n_hubs > p || (n_hubs > 0 && spokes_per_hub > p - 1) ||
        n_hubs * spokes_per_hub > p * (p - 1) / 2) {
        throw InvalidConfig("gen_hub_precision: too many hub edges for p");
    }
    std::mt19937_64 engine(mix64(seed));
    std::vector<Index> nodes(static_cast<std::size_t>(p));
    std::iota(nodes.begin(), nodes.end(), Index{0});
    std::shuffle(nodes.begin(), nodes.end(), engine);
    const std::vector<Index> hubs(nodes.begin(), nodes.begin() + n_hubs);

    Matrix a = Matrix::Zero(p, p);
    for (const Index hub : hubs) {
        std::vector<Index> others;
        others.reserve(static_cast<std::size_t>(p - 1));
        for (Index j = 0; j < p; ++j) {
            if (j != hub) others.push_back(j);
        }
        std::shuffle(others.begin(), others.end(), engine);
        for (Index k = 0; k < spokes_per_hub; ++k) {
            const Index j = others[static_cast<std::size_t>(k)];
            if (a(hub, j) != 0.0) continue;  // already joined by another hub
            const double v = draw_weight(engine, options);
            a(hub, j) = v;
            a(j, hub) = v;
        }
    }
    return finish_sparse(std::move(a), options);
}

PrecisionMatrix make_block_change(const PrecisionMatrix& omega_pre, Index s, double beta) {
    if (s < 1 || s > omega_pre.p()) throw InvalidConfig("make_block_change: s must lie in [1, p]");
    Matrix m = omega_pre.entries();
    m.topLeftCorner(s, s).array() += beta / static_cast<double>(s);
    return PrecisionMatrix(m);
}

PrecisionMatrix make_antidiag_change(const PrecisionMatrix& omega_pre, Index s, double beta) {
    const Index p = omega_pre.p();
    if (s < 0 || 2 * s > p) throw InvalidConfig("make_antidiag_change: s must lie in [0, p/2]");
    Matrix m = omega_pre.entries();
    for (Index i = 0; i < s; ++i) {
        m(i, p - s + i) += beta;
        m(p - s + i, i) += beta;
    }
    return PrecisionMatrix(m);
}

PrecisionMatrix make_uniform_change(const PrecisionMatrix& omega_pre, double beta) {
    if (!(beta > -1.0)) throw InvalidConfig("make_uniform_change: beta must exceed -1");
    return PrecisionMatrix(omega_pre.entries() / (1.0 + beta));
}

ChangeScenario::ChangeScenario(PrecisionMatrix pre, PrecisionMatrix post, Index t0_, Index n_burnin_,
                               Index horizon_)
    : omega_pre(std::move(pre)), omega_post(std::move(post)), t0(t0_), n_burnin(n_burnin_), horizon(horizon_) {
    require_dims(omega_pre.p() == omega_post.p(), "ChangeScenario: pre/post dimensions differ");
    if (t0 < 1 || t0 > horizon || n_burnin < 0) throw InvalidConfig("ChangeScenario: need 1 <= t0 <= horizon");
}

GaussianStream::GaussianStream(const ChangeScenario& scenario, std::uint64_t seed)
    : scenario_(scenario),
      factor_pre_(scenario.omega_pre.covariance_factor()),
      factor_post_(scenario.omega_post.covariance_factor()),
      source_(seed) {}

Vector GaussianStream::next() {
    if (cursor_ >= scenario_.length()) throw std::out_of_range("GaussianStream: past end of scenario");
    ++cursor_;
    Vector z(scenario_.p());
    for (Index i = 0; i < z.size(); ++i) z(i) = source_.next();
    const Matrix& factor = scenario_.is_pre_change(cursor_) ? factor_pre_ : factor_post_;
    return factor.triangularView<Eigen::Lower>() * z;
}

Matrix GaussianStream::next_block(Index count) {
    Matrix out(scenario_.p(), count);
    for (Index k = 0; k < count; ++k) out.col(k) = next();
    return out;
}

Matrix sample_stream(const ChangeScenario& scenario, std::uint64_t seed, Index count) {
    if (count > scenario.length()) throw InvalidConfig("sample_stream: count exceeds scenario length");
    GaussianStream stream(scenario, seed);
    return stream.next_block(count);
}

Matrix sample_gaussian(const Matrix& covariance_factor, NormalSource& source, Index count) {
    const Matrix z = source.matrix(covariance_factor.rows(), count);
    return covariance_factor.triangularView<Eigen::Lower>() * z;
}

Index upper_nonzeros(const Matrix& m, double zero_tol) {
    Index count = 0;
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i <= j; ++i) {
            if (std::abs(m(i, j)) > zero_tol) ++count;
        }
    }
    return count;
}

}  // namespace lcpd
