#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "lcpd/clime.hpp"
#include "lcpd/common.hpp"
#include "lcpd/precision.hpp"
#include "lcpd/statistic.hpp"
#include "lcpd/threshold.hpp"

namespace lcpd {

/// Batch size meaning "never re-estimate during monitoring".
inline constexpr Index kNeverUpdate = std::numeric_limits<Index>::max();

struct DetectorConfig {
    Index n_burnin = 300;
    Index w = 50;
    Index batch = kNeverUpdate;
    ThresholdSpec threshold;
    ClimeConfig clime;
    std::optional<PrecisionMatrix> oracle_omega;

    /// Throws InvalidConfig. The threshold must already be resolved.
    void validate() const;
};

struct DetectionEvent {
    Index t = 0;
    double statistic = 0.0;
    double zeta = 0.0;
    Index delay_estimate = 0;  // t minus the first monitoring step of the segment
};

enum class Phase { burn_in, monitoring };

/// One row of the per-step trace. `statistic` is NaN when no test ran.
struct TraceRow {
    Index t = 0;
    Phase phase = Phase::burn_in;
    double statistic = std::numeric_limits<double>::quiet_NaN();
    bool estimate_updated = false;
    bool detected = false;
};

/// Sequential detector: burn-in estimation, sliding-window sup-norm test,
/// batch re-estimation on all samples since the last detection, and
/// re-initialization after each detection.
class Detector {
public:
    explicit Detector(DetectorConfig config);

    /// Feed one observation; t advances by one (first call is t = 1).
    std::optional<DetectionEvent> step(const Vector& x);

    [[nodiscard]] Index t() const { return t_; }
    [[nodiscard]] Index t_last() const { return t_last_; }
    [[nodiscard]] Phase phase() const { return phase_; }
    [[nodiscard]] Index batch_counter() const { return b_; }
    [[nodiscard]] double zeta() const { return zeta_; }
    [[nodiscard]] const std::vector<DetectionEvent>& detections() const { return detections_; }
    [[nodiscard]] const Matrix& omega_hat() const { return omega_hat_; }
    [[nodiscard]] Index estimate_count() const { return estimate_count_; }
    [[nodiscard]] const TraceRow& last_trace() const { return last_; }
    [[nodiscard]] const DetectorConfig& config() const { return config_; }

private:
    void start_burn_in();
    void start_monitoring();
    void estimate_from(const std::vector<Vector>& samples);
    bool keeps_history() const;

    DetectorConfig config_;
    double zeta_ = 0.0;
    Phase phase_ = Phase::burn_in;
    Index t_ = 0;
    Index t_last_ = 0;
    Index collected_ = 0;
    Index b_ = 0;
    Index monitor_start_ = 0;
    Index estimate_count_ = 0;
    Matrix omega_hat_;
    MomentWindow window_;
    std::vector<Vector> burn_in_;
    std::vector<Vector> since_last_;
    std::vector<DetectionEvent> detections_;
    TraceRow last_;
};

struct OfflineResult {
    std::vector<DetectionEvent> detections;
    std::vector<TraceRow> trace;
};

/// Run the detector over every column of `stream` (p x T).
OfflineResult run_offline(const DetectorConfig& config, const Matrix& stream);

}  // namespace lcpd
