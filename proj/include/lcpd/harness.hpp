#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lcpd/common.hpp"
#include "lcpd/io.hpp"
#include "lcpd/precision.hpp"
#include "lcpd/threshold.hpp"

namespace lcpd {

enum class ExperimentKind { fa_calibration, plugin_calibration, delay_profile, power_curve, delay_curve, lcpd_block };
enum class StatMode { oracle, plugin };
enum class ModelKind { chain, sparse, hub };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& text);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::fa_calibration;
    std::string preset;
    Index replicates = 10000;
    std::uint64_t seed = 1;
    std::uint64_t model_seed = 7;

    ModelKind model = ModelKind::sparse;
    Index p = 100;
    double rho0 = 0.5;
    double density = 0.05;
    bool count_diagonal = false;
    double diag_inflation = 0.1;
    Index hubs = 4;
    Index spokes = 20;

    Index w = 50;
    Index n_burnin = 300;
    double pi0 = 0.05;
    ThresholdMethod threshold = ThresholdMethod::exact;
    StatMode mode = StatMode::plugin;
    double clime_c = 0.6;
    Index fits = 1;
    Index t0 = 100;
    bool no_change = false;

    std::vector<Index> n_grid;
    std::vector<Index> w_grid;
    std::vector<Index> s_grid;
    std::vector<double> beta_grid;

    int jobs = 1;  // execution only; never affects results

    /// Set one key from text. Throws InvalidConfig on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    void apply(const KeyValues& values);
    void validate() const;

    /// Every result-relevant key with its current value, in a fixed order.
    [[nodiscard]] KeyValues echo() const;
};

/// Known keys accepted by ExperimentConfig::set.
const std::vector<std::string>& experiment_keys();

std::vector<std::string> preset_names();
/// Throws InvalidConfig for an unknown name.
ExperimentConfig preset(const std::string& name);

struct Metric {
    std::string name;
    double value = 0.0;
    std::optional<double> se;
    Index n = 0;
};

struct CellResult {
    std::string cell;
    std::vector<std::pair<std::string, double>> params;
    std::vector<Metric> metrics;

    [[nodiscard]] const Metric& metric(const std::string& name) const;
    [[nodiscard]] double value(const std::string& name) const { return metric(name).value; }
    [[nodiscard]] double se(const std::string& name) const;
};

struct ExperimentResult {
    ExperimentKind kind = ExperimentKind::fa_calibration;
    KeyValues config;
    std::uint64_t seed = 0;
    Index replicates = 0;
    std::vector<CellResult> cells;

    [[nodiscard]] const CellResult& cell(const std::string& label) const;
};

/// Rate metric with SE = √(r(1-r)/n).
Metric rate_metric(std::string name, Index hits, Index n);

/// Runs fn(i) for i in [0, n) on `jobs` threads. fn must only write to
/// per-index state.
void parallel_for(Index n, int jobs, const std::function<void(Index)>& fn);

PrecisionMatrix build_model(const ExperimentConfig& config);

ExperimentResult fa_calibration(const ExperimentConfig& config);
ExperimentResult plugin_calibration(const ExperimentConfig& config);
ExperimentResult delay_profile(const ExperimentConfig& config);
ExperimentResult power_curve(const ExperimentConfig& config);
ExperimentResult delay_curve(const ExperimentConfig& config);
ExperimentResult lcpd_block_power(const ExperimentConfig& config);

/// Dispatch on config.kind.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// CSV: header "kind,cell,metric,value,se,n", one row per cell per metric.
void write_csv(std::ostream& out, const ExperimentResult& result);
/// One JSON object per cell.
void write_ndjson(std::ostream& out, const ExperimentResult& result);

}  // namespace lcpd
