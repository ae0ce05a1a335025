#pragma once

#include <cstdint>
#include <vector>

#include "lcpd/common.hpp"
#include "lcpd/precision.hpp"
#include "lcpd/random.hpp"

namespace lcpd {

/// Tridiagonal precision with unit diagonal and `rho0` on the first
/// off-diagonals.
PrecisionMatrix gen_chain_precision(Index p, double rho0);

/// Options shared by the random sparse generators.
struct SparseGenOptions {
    double diag_inflation = 0.1;
    double weight_lo = 0.1;  // off-diagonal magnitudes ~ U[lo, hi] with random sign
    double weight_hi = 0.4;
    bool standardize = true;  // rescale to unit-variance nodes
};

/// Erdős–Rényi support with expected off-diagonal row degree
/// row_density * p (or row_density * p - 1 when `count_diagonal` is set, so
/// the diagonal is part of the per-row budget). The diagonal is set to
/// |λ_min(A)| + diag_inflation where A is the off-diagonal part, then the
/// matrix is standardized.
PrecisionMatrix gen_random_sparse(Index p, double row_density, std::uint64_t seed,
                                  const SparseGenOptions& options = {}, bool count_diagonal = false);

/// `n_hubs` distinct hub nodes, each joined to `spokes_per_hub` other nodes
/// chosen at random; weights and diagonal as in gen_random_sparse.
PrecisionMatrix gen_hub_precision(Index p, Index n_hubs, Index spokes_per_hub, std::uint64_t seed,
                                  const SparseGenOptions& options = {});

/// Ω + Δ with Δ_ij = β/s on the leading s x s block.
PrecisionMatrix make_block_change(const PrecisionMatrix& omega_pre, Index s, double beta);

/// Ω + Δ with β on the anti-corner identity blocks: entries (i, p-s+i) and
/// (p-s+i, i) for i < s, i.e. s new edges.
PrecisionMatrix make_antidiag_change(const PrecisionMatrix& omega_pre, Index s, double beta);

/// Ω / (1 + β), β > -1.
PrecisionMatrix make_uniform_change(const PrecisionMatrix& omega_pre, double beta);

/// Pre/post regimes of a single change. Samples 1..n_burnin + t0 (1-based)
/// follow omega_pre, later samples follow omega_post.
struct ChangeScenario {
    PrecisionMatrix omega_pre;
    PrecisionMatrix omega_post;
    Index t0 = 1;
    Index n_burnin = 0;
    Index horizon = 0;

    ChangeScenario(PrecisionMatrix pre, PrecisionMatrix post, Index t0, Index n_burnin, Index horizon);

    [[nodiscard]] Index p() const { return omega_pre.p(); }
    [[nodiscard]] Index length() const { return n_burnin + horizon; }
    /// True when the 1-based sample index is drawn from the pre-change law.
    [[nodiscard]] bool is_pre_change(Index index) const { return index <= n_burnin + t0; }
};

/// Deterministic sample generator for a scenario: x = L z with L the
/// Cholesky factor of the active covariance and z from a seeded normal source.
class GaussianStream {
public:
    GaussianStream(const ChangeScenario& scenario, std::uint64_t seed);

    /// Next sample; throws std::out_of_range past the end of the scenario.
    Vector next();

    /// Next `count` samples as the columns of a p x count matrix.
    Matrix next_block(Index count);

    [[nodiscard]] Index cursor() const { return cursor_; }
    [[nodiscard]] const ChangeScenario& scenario() const { return scenario_; }

private:
    ChangeScenario scenario_;
    Matrix factor_pre_;
    Matrix factor_post_;
    NormalSource source_;
    Index cursor_ = 0;  // samples emitted so far
};

/// First `count` samples of the scenario's stream for `seed`, one per column.
Matrix sample_stream(const ChangeScenario& scenario, std::uint64_t seed, Index count);

/// `count` i.i.d. draws from N(0, Σ) given the lower Cholesky factor of Σ.
Matrix sample_gaussian(const Matrix& covariance_factor, NormalSource& source, Index count);

/// Number of nonzero entries in the upper triangle including the diagonal.
Index upper_nonzeros(const Matrix& m, double zero_tol = 0.0);

}  // namespace lcpd
