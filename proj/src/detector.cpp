#include "lcpd/detector.hpp"

#include <utility>

namespace lcpd {

void DetectorConfig::validate() const {
    if (w < 2) throw InvalidConfig("detector: w must be at least 2");
    if (batch < 1) throw InvalidConfig("detector: batch must be at least 1");
    if (oracle_omega) {
        if (n_burnin < 0) throw InvalidConfig("detector: n_burnin must be nonnegative");
    } else {
        if (n_burnin < 2) throw InvalidConfig("detector: n_burnin must be at least 2");
        clime.validate();
    }
    if (!threshold.zeta) throw InvalidConfig("detector: threshold is not resolved");
    if (!(*threshold.zeta >= 0.0)) throw InvalidConfig("detector: threshold must be nonnegative");
    if (oracle_omega && oracle_omega->p() != threshold.p) {
        throw InvalidConfig("detector: oracle precision dimension does not match threshold p");
    }
}

Detector::Detector(DetectorConfig config)
    : config_(std::move(config)), window_(std::max<Index>(config_.threshold.p, 1), std::max<Index>(config_.w, 1)) {
    config_.validate();
    zeta_ = *config_.threshold.zeta;
    if (config_.oracle_omega) {
        omega_hat_ = config_.oracle_omega->entries();
        window_.set_transform(omega_hat_);
    }
    start_burn_in();
}

bool Detector::keeps_history() const { return !config_.oracle_omega && config_.batch != kNeverUpdate; }

void Detector::start_burn_in() {
    phase_ = Phase::burn_in;
    collected_ = 0;
    burn_in_.clear();
    since_last_.clear();
    window_.clear();
    b_ = 0;
    if (config_.n_burnin == 0) start_monitoring();
}

void Detector::start_monitoring() {
    phase_ = Phase::monitoring;
    monitor_start_ = t_ + 1;
    b_ = 0;
}

void Detector::estimate_from(const std::vector<Vector>& samples) {
    const Index p = config_.threshold.p;
    Matrix data(p, static_cast<Index>(samples.size()));
    for (std::size_t k = 0; k < samples.size(); ++k) data.col(static_cast<Index>(k)) = samples[k];
    omega_hat_ = clime_estimate(data, config_.clime).omega_hat;
    window_.set_transform(omega_hat_);
    ++estimate_count_;
    last_.estimate_updated = true;
}

std::optional<DetectionEvent> Detector::step(const Vector& x) {
    require_dims(x.size() == config_.threshold.p, "detector: sample dimension mismatch");
    ++t_;
    last_ = TraceRow{};
    last_.t = t_;
    last_.phase = phase_;

    if (phase_ == Phase::burn_in) {
        ++collected_;
        if (!config_.oracle_omega) burn_in_.push_back(x);
        if (keeps_history()) since_last_.push_back(x);
        if (collected_ == config_.n_burnin) {
            if (!config_.oracle_omega) {
                estimate_from(burn_in_);
                burn_in_.clear();
                burn_in_.shrink_to_fit();
            }
            start_monitoring();
        }
        return std::nullopt;
    }

    window_.push(x);
    if (keeps_history()) since_last_.push_back(x);
    if (!window_.full()) return std::nullopt;

    const double stat = window_.sup_norm();
    last_.statistic = stat;
    if (stat >= zeta_) {
        DetectionEvent event{t_, stat, zeta_, t_ - monitor_start_};
        detections_.push_back(event);
        t_last_ = t_;
        last_.detected = true;
        start_burn_in();
        return event;
    }
    if (++b_ == config_.batch) {
        estimate_from(since_last_);
        b_ = 0;
    }
    return std::nullopt;
}

OfflineResult run_offline(const DetectorConfig& config, const Matrix& stream) {
    Detector detector(config);
    OfflineResult result;
    result.trace.reserve(static_cast<std::size_t>(stream.cols()));
    for (Index k = 0; k < stream.cols(); ++k) {
        detector.step(stream.col(k));
        result.trace.push_back(detector.last_trace());
    }
    result.detections = detector.detections();
    return result;
}

}  // namespace lcpd
