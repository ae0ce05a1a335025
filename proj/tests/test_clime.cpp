#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "lcpd/clime.hpp"
#include "lcpd/linalg.hpp"
#include "lcpd/modelgen.hpp"
#include "lcpd/simplex.hpp"
#include "lp_oracle.hpp"

using namespace lcpd;
using lcpd::oracle::brute_force_clime;
using lcpd::oracle::brute_force_lp;

namespace {

Matrix random_covariance(Index p, Index n, std::uint64_t seed) {
    NormalSource src(seed);
    return sample_covariance(src.matrix(p, n));
}

}  // namespace

TEST(Simplex, TextbookOptimum) {
    Vector c(2);
    c << -1.0, -1.0;
    Matrix a(2, 2);
    a << 1.0, 2.0, 3.0, 1.0;
    Vector b(2);
    b << 4.0, 6.0;
    const auto sol = solve_lp(c, a, b);
    EXPECT_NEAR(sol.x(0), 1.6, 1e-12);
    EXPECT_NEAR(sol.x(1), 1.2, 1e-12);
    EXPECT_NEAR(sol.objective, -2.8, 1e-12);
    EXPECT_NEAR(sol.duality_gap(), 0.0, 1e-12);
}

TEST(Simplex, NegativeRightHandSide) {
    Vector c(1);
    c << 1.0;
    Matrix a(1, 1);
    a << -1.0;
    Vector b(1);
    b << -2.0;
    EXPECT_NEAR(solve_lp(c, a, b).x(0), 2.0, 1e-12);
}

TEST(Simplex, InfeasibleAndUnbounded) {
    Vector c(1);
    c << 1.0;
    Matrix a(1, 1);
    a << 1.0;
    Vector b(1);
    b << -1.0;
    EXPECT_THROW(solve_lp(c, a, b), Infeasible);

    Vector c2(2);
    c2 << -1.0, 0.0;
    Matrix a2(1, 2);
    a2 << 0.0, 1.0;
    Vector b2(1);
    b2 << 1.0;
    EXPECT_THROW(solve_lp(c2, a2, b2), Unbounded);
}

TEST(Simplex, RandomLpsMatchVertexEnumeration) {
    NormalSource src(99);
    for (int trial = 0; trial < 40; ++trial) {
        const Matrix a = src.matrix(4, 3);
        Vector b = src.matrix(4, 1).col(0);
        b = b.cwiseAbs() + Vector::Constant(4, 0.1);
        if (trial % 3 == 0) b(0) = -0.2;  // forces phase 1
        Vector c = src.matrix(3, 1).col(0);
        const Matrix a_box = (Matrix(7, 3) << a, Matrix::Identity(3, 3)).finished();
        const Vector b_box = (Vector(7) << b, Vector::Constant(3, 5.0)).finished();
        const double expected = brute_force_lp(c, a_box, b_box);
        for (const auto rule : {PricingRule::dantzig, PricingRule::bland}) {
            SimplexOptions options;
            options.pricing = rule;
            if (std::isinf(expected)) {
                EXPECT_THROW(solve_lp(c, a_box, b_box, options), Infeasible);
            } else {
                EXPECT_NEAR(solve_lp(c, a_box, b_box, options).objective, expected, 1e-8) << "trial " << trial;
            }
        }
    }
}

TEST(ClimeColumn, SmallExamples) {
    const Matrix eye = Matrix::Identity(3, 3);
    const Vector b0 = clime_column(eye, 0, 0.0);
    EXPECT_LT(max_abs(Vector(b0 - Vector::Unit(3, 0))), 1e-12);
    const Vector b3 = clime_column(eye, 0, 0.3);
    EXPECT_LT(max_abs(Vector(b3 - 0.7 * Vector::Unit(3, 0))), 1e-12);

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 4.0;
    const Vector b = clime_column(d, 1, 0.0);
    EXPECT_NEAR(b(0), 0.0, 1e-12);
    EXPECT_NEAR(b(1), 0.25, 1e-12);
}

TEST(ClimeColumn, MatchesVertexEnumeration) {
    for (const Index p : {2, 3, 4}) {
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            const Matrix s = random_covariance(p, 6, seed + 10 * static_cast<std::uint64_t>(p));
            for (const double lambda : {0.05, 0.2, 0.5}) {
                for (Index j = 0; j < p; ++j) {
                    const double expected = brute_force_clime(s, j, lambda);
                    if (std::isinf(expected)) {
                        EXPECT_THROW(clime_column(s, j, lambda), Infeasible);
                        continue;
                    }
                    const Vector beta = clime_column(s, j, lambda);
                    EXPECT_NEAR(beta.lpNorm<1>(), expected, 1e-8) << "p=" << p << " j=" << j << " l=" << lambda;
                    EXPECT_LE((s * beta - Vector::Unit(p, j)).lpNorm<Eigen::Infinity>(), lambda + 1e-9);
                }
            }
        }
    }
}

TEST(ClimeColumn, SingularCovarianceIsInfeasibleForSmallLambda) {
    const Matrix s = Matrix::Ones(2, 2);
    EXPECT_THROW(clime_column(s, 0, 0.3), Infeasible);
    EXPECT_NO_THROW(clime_column(s, 0, 0.6));
}

TEST(ClimeColumn, NormShrinksAsLambdaGrows) {
    const Matrix s = random_covariance(8, 40, 5);
    double previous = std::numeric_limits<double>::infinity();
    for (const double lambda : {0.02, 0.05, 0.1, 0.2, 0.4, 0.8}) {
        const double norm = clime_column(s, 3, lambda).lpNorm<1>();
        EXPECT_LE(norm, previous + 1e-10);
        previous = norm;
    }
    EXPECT_EQ(clime_column(s, 3, 1.0).lpNorm<1>(), 0.0);
}

TEST(Clime, SymmetrizeKeepsSmallerMagnitude) {
    Matrix b(2, 2);
    b << 1.0, -0.2, 0.5, 2.0;
    const Matrix s = symmetrize_min_magnitude(b);
    EXPECT_EQ(s(0, 1), -0.2);
    EXPECT_EQ(s(1, 0), -0.2);
    EXPECT_EQ(s(1, 1), 2.0);
}

TEST(Clime, SampleCovariance) {
    Matrix x(2, 2);
    x << 1.0, 3.0, 2.0, 4.0;
    Matrix expected(2, 2);
    expected << 5.0, 7.0, 7.0, 10.0;
    EXPECT_EQ(sample_covariance(x), expected);
    Matrix centered(2, 2);
    centered << 1.0, 1.0, 1.0, 1.0;
    EXPECT_EQ(sample_covariance(x, true), centered);
}

TEST(Clime, EstimateIsFeasibleSymmetricAndPsd) {
    const auto omega = gen_random_sparse(30, 0.1, 3);
    NormalSource src(4);
    const Matrix x = sample_gaussian(omega.covariance_factor(), src, 120);
    ClimeConfig config;
    const auto est = clime_estimate(x, config);
    EXPECT_NEAR(est.lambda_used, 0.6 * std::sqrt(std::log(30.0) / 120.0), 1e-15);
    EXPECT_LE(est.feasibility_gap, 1e-9);
    EXPECT_EQ(est.omega_hat, est.omega_hat.transpose());
    EXPECT_GE(min_eigenvalue(est.omega_hat), -1e-10);

    ClimeConfig threaded = config;
    threaded.threads = 4;
    EXPECT_EQ(clime_estimate(x, threaded).omega_hat, est.omega_hat);
}

TEST(Clime, RecoversChainPrecision) {
    const auto omega = gen_chain_precision(10, 0.5);
    NormalSource src(12);
    const Matrix x = sample_gaussian(omega.covariance_factor(), src, 2000);
    const auto est = clime_estimate(x, ClimeConfig{});
    EXPECT_LT(normalized_error(est.omega_hat, omega.entries()), 0.15);
    EXPECT_LT(max_abs(Matrix(est.omega_hat - omega.entries())), 0.2);
}

TEST(Clime, ConfigValidation) {
    ClimeConfig bad;
    bad.c = -1.0;
    EXPECT_THROW(bad.validate(), InvalidConfig);
    ClimeConfig fixed;
    fixed.lambda_rule = LambdaRule::fixed;
    fixed.lambda = 0.25;
    EXPECT_EQ(fixed.lambda_for(100, 300), 0.25);
    EXPECT_THROW(clime_estimate(Matrix::Ones(3, 1), ClimeConfig{}), Error);
    EXPECT_EQ(normalized_error(Matrix::Identity(2, 2), Matrix::Identity(2, 2)), 0.0);
}
