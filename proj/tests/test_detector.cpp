#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "lcpd/detector.hpp"
#include "lcpd/modelgen.hpp"

using namespace lcpd;

namespace {

DetectorConfig oracle_config(const PrecisionMatrix& omega, Index w, double zeta) {
    DetectorConfig c;
    c.n_burnin = 0;
    c.w = w;
    c.oracle_omega = omega;
    c.threshold = ThresholdSpec{0.05, omega.p(), w, ThresholdMethod::exact, zeta};
    return c;
}

DetectorConfig plugin_config(Index p, Index n_burnin, Index w, double zeta) {
    DetectorConfig c;
    c.n_burnin = n_burnin;
    c.w = w;
    c.threshold = ThresholdSpec{0.05, p, w, ThresholdMethod::exact, zeta};
    return c;
}

Matrix null_stream(const PrecisionMatrix& omega, Index count, std::uint64_t seed) {
    NormalSource src(seed);
    return sample_gaussian(omega.covariance_factor(), src, count);
}

}  // namespace

TEST(Detector, HugeThresholdNeverFires) {
    const auto omega = gen_chain_precision(6, 0.3);
    const auto result = run_offline(oracle_config(omega, 10, 1e6), null_stream(omega, 200, 1));
    EXPECT_TRUE(result.detections.empty());
    EXPECT_EQ(result.trace.size(), 200U);
    EXPECT_TRUE(std::isnan(result.trace[8].statistic));
    EXPECT_FALSE(std::isnan(result.trace[9].statistic));
}

TEST(Detector, ZeroThresholdFiresEveryWindow) {
    const auto omega = gen_chain_precision(6, 0.3);
    const auto result = run_offline(oracle_config(omega, 10, 0.0), null_stream(omega, 35, 2));
    ASSERT_EQ(result.detections.size(), 3U);
    EXPECT_EQ(result.detections[0].t, 10);
    EXPECT_EQ(result.detections[1].t, 20);
    EXPECT_EQ(result.detections[2].t, 30);
    EXPECT_EQ(result.detections[1].delay_estimate, 9);
}

TEST(Detector, FirstWindowEqualsOracleBitwise) {
    const auto omega = gen_random_sparse(12, 0.2, 3);
    const Matrix x = null_stream(omega, 20, 4);
    Detector detector(oracle_config(omega, 20, 1e6));
    for (Index k = 0; k < 20; ++k) detector.step(x.col(k));
    EXPECT_EQ(detector.last_trace().statistic, oracle_statistic(omega, SampleWindow(x)).sup_norm);
}

TEST(Detector, BurnInRunsNoTests) {
    const auto omega = gen_chain_precision(8, 0.4);
    const Matrix x = null_stream(omega, 340, 5);
    const auto result = run_offline(plugin_config(8, 300, 20, 1e6), x);
    for (Index k = 0; k < 300; ++k) {
        EXPECT_EQ(result.trace[static_cast<std::size_t>(k)].phase, Phase::burn_in);
        EXPECT_TRUE(std::isnan(result.trace[static_cast<std::size_t>(k)].statistic));
    }
    EXPECT_TRUE(result.trace[299].estimate_updated);
    EXPECT_TRUE(std::isnan(result.trace[318].statistic));
    EXPECT_FALSE(std::isnan(result.trace[319].statistic));
}

TEST(Detector, PluginWithBurnInEstimateMatchesBatchStatistic) {
    const auto omega = gen_chain_precision(8, 0.4);
    const Matrix x = null_stream(omega, 120, 6);
    Detector detector(plugin_config(8, 100, 20, 1e6));
    for (Index k = 0; k < 120; ++k) detector.step(x.col(k));
    const auto expected = plugin_statistic(detector.omega_hat(), SampleWindow(x.rightCols(20)));
    EXPECT_EQ(detector.last_trace().statistic, expected.sup_norm);
    EXPECT_EQ(detector.omega_hat(), clime_estimate(x.leftCols(100), ClimeConfig{}).omega_hat);
}

TEST(Detector, BatchUpdatesAfterEveryBatchOfTests) {
    const auto omega = gen_chain_precision(6, 0.3);
    auto config = plugin_config(6, 50, 10, 1e6);
    config.batch = 5;
    const auto result = run_offline(config, null_stream(omega, 80, 7));
    std::vector<Index> updates;
    for (const auto& row : result.trace) {
        if (row.estimate_updated) updates.push_back(row.t);
    }
    // Burn-in fit at 50, first test at 60, then a refit after every 5 tests.
    EXPECT_EQ(updates, (std::vector<Index>{50, 64, 69, 74, 79}));
}

TEST(Detector, DetectionsAreSeparatedByBurnIn) {
    const auto omega = gen_chain_precision(6, 0.3);
    auto config = plugin_config(6, 30, 10, 0.0);
    const auto result = run_offline(config, null_stream(omega, 200, 8));
    ASSERT_GE(result.detections.size(), 2U);
    for (std::size_t i = 1; i < result.detections.size(); ++i) {
        EXPECT_GE(result.detections[i].t - result.detections[i - 1].t, 30 + 10);
    }
}

TEST(Detector, DetectsStrongChange) {
    const auto pre = gen_chain_precision(10, 0.3);
    const auto post = make_uniform_change(pre, 3.0);
    const ChangeScenario scenario(pre, post, 100, 0, 300);
    const Matrix x = sample_stream(scenario, 9, 300);
    const double zeta = critical_value_exact(0.05, 10, 30);
    const auto result = run_offline(oracle_config(pre, 30, zeta), x);
    ASSERT_FALSE(result.detections.empty());
    const auto first_after = std::find_if(result.detections.begin(), result.detections.end(),
                                          [](const DetectionEvent& e) { return e.t > 100; });
    ASSERT_NE(first_after, result.detections.end());
    EXPECT_LE(first_after->t, 100 + 30);
}

TEST(Detector, DeterministicAndEmptyStream) {
    const auto omega = gen_chain_precision(6, 0.3);
    const auto config = plugin_config(6, 40, 10, 2.5);
    const Matrix x = null_stream(omega, 150, 10);
    const auto a = run_offline(config, x);
    const auto b = run_offline(config, x);
    ASSERT_EQ(a.detections.size(), b.detections.size());
    for (std::size_t i = 0; i < a.detections.size(); ++i) {
        EXPECT_EQ(a.detections[i].t, b.detections[i].t);
        EXPECT_EQ(a.detections[i].statistic, b.detections[i].statistic);
    }
    EXPECT_TRUE(run_offline(config, Matrix(6, 0)).detections.empty());
}

TEST(Detector, ValidationErrors) {
    const auto omega = gen_chain_precision(6, 0.3);
    auto unresolved = oracle_config(omega, 10, 1.0);
    unresolved.threshold.zeta.reset();
    EXPECT_THROW(Detector{unresolved}, InvalidConfig);
    auto small_w = oracle_config(omega, 1, 1.0);
    EXPECT_THROW(Detector{small_w}, InvalidConfig);
    auto wrong_p = oracle_config(omega, 10, 1.0);
    wrong_p.threshold.p = 7;
    EXPECT_THROW(Detector{wrong_p}, InvalidConfig);
    EXPECT_THROW(Detector{plugin_config(6, 1, 10, 1.0)}, InvalidConfig);
    Detector ok(oracle_config(omega, 10, 1.0));
    EXPECT_THROW(ok.step(Vector::Zero(5)), DimensionMismatch);
}
