#include "lcpd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "lcpd/clime.hpp"
#include "lcpd/modelgen.hpp"
#include "lcpd/random.hpp"
#include "lcpd/statistic.hpp"

namespace lcpd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

double parse_real(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw InvalidConfig("'" + key + "' expects a number, got '" + text + "'");
    }
}

Index parse_index(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return static_cast<Index>(v);
    } catch (const std::exception&) {
        throw InvalidConfig("'" + key + "' expects an integer, got '" + text + "'");
    }
}

std::uint64_t parse_seed(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(text, &used);
        if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw InvalidConfig("'" + key + "' expects a nonnegative integer, got '" + text + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = lower(text);
    if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
    if (t == "0" || t == "false" || t == "no" || t == "off") return false;
    throw InvalidConfig("'" + key + "' expects a boolean, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<Index> parse_index_list(const std::string& key, const std::string& text) {
    std::vector<Index> out;
    for (const auto& item : split_list(text)) out.push_back(parse_index(key, item));
    return out;
}

std::vector<double> parse_real_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_real(key, item));
    return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (k) out += ',';
        if constexpr (std::is_floating_point_v<T>) {
            out += format_double(xs[k]);
        } else {
            out += std::to_string(xs[k]);
        }
    }
    return out;
}

std::string mode_name(StatMode m) { return m == StatMode::oracle ? "oracle" : "plugin"; }

std::string model_name(ModelKind m) {
    switch (m) {
        case ModelKind::chain: return "chain";
        case ModelKind::sparse: return "sparse";
        case ModelKind::hub: return "hub";
    }
    return "sparse";
}

// "k=v;k=v" with values in %.17g so labels are stable identifiers.
std::string cell_label(const std::vector<std::pair<std::string, double>>& params) {
    std::string out;
    for (const auto& [k, v] : params) {
        if (!out.empty()) out += ';';
        out += k + "=" + format_double(v);
    }
    return out.empty() ? "all" : out;
}

CellResult make_cell(std::vector<std::pair<std::string, double>> params) {
    CellResult cell;
    cell.cell = cell_label(params);
    cell.params = std::move(params);
    return cell;
}

Metric value_metric(std::string name, double value, Index n = 0) { return Metric{std::move(name), value, {}, n}; }

Metric mean_metric(std::string name, const std::vector<double>& xs) {
    const auto n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (const double x : xs) ss += (x - mean) * (x - mean);
    const double se = xs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : kNaN;
    return Metric{std::move(name), mean, se, static_cast<Index>(xs.size())};
}

// Type-1 empirical quantile.
double empirical_quantile(std::vector<double> xs, double q) {
    std::sort(xs.begin(), xs.end());
    const auto n = static_cast<double>(xs.size());
    const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(q * n)));
    return xs[std::min(k, xs.size()) - 1];
}

Index count_at_least(const std::vector<double>& xs, double z) {
    return static_cast<Index>(std::count_if(xs.begin(), xs.end(), [z](double x) { return x >= z; }));
}

double zeta_for(const ExperimentConfig& c, Index w) {
    return *resolve(ThresholdSpec{c.pi0, c.p, w, c.threshold, std::nullopt}).zeta;
}

SparseGenOptions sparse_options(const ExperimentConfig& c) {
    SparseGenOptions o;
    o.diag_inflation = c.diag_inflation;
    return o;
}

PrecisionMatrix build_post_model(const ExperimentConfig& c) {
    const std::uint64_t seed = derive_seed(c.model_seed, label_hash("post"), 0);
    if (c.model == ModelKind::hub) return gen_hub_precision(c.p, c.hubs, c.spokes, seed, sparse_options(c));
    return gen_random_sparse(c.p, c.density, seed, sparse_options(c), c.count_diagonal);
}

ClimeConfig clime_config(const ExperimentConfig& c) {
    ClimeConfig cc;
    cc.c = c.clime_c;
    return cc;
}

Matrix burn_in_samples(const ExperimentConfig& c, const PrecisionMatrix& omega, Index fit, Index n) {
    NormalSource src(derive_seed(c.seed, label_hash("burnin"), static_cast<std::uint64_t>(fit)));
    return sample_gaussian(omega.covariance_factor(), src, n);
}

// Transform used by the statistic: the true Ω in oracle mode, else one CLIME
// fit on N burn-in samples.
struct Transform {
    Matrix omega;
    double ehat = 0.0;
};

Transform pick_transform(const ExperimentConfig& c, const PrecisionMatrix& omega) {
    if (c.mode == StatMode::oracle) return {omega.entries(), 0.0};
    Transform t;
    t.omega = clime_estimate(burn_in_samples(c, omega, 0, c.n_burnin), clime_config(c)).omega_hat;
    t.ehat = normalized_error(t.omega, omega.entries());
    return t;
}

double window_statistic(const Matrix& transform, const Matrix& samples) {
    return plugin_statistic(transform, SampleWindow(samples)).sup_norm;
}

ExperimentResult new_result(const ExperimentConfig& c) {
    ExperimentResult r;
    r.kind = c.kind;
    r.config = c.echo();
    r.seed = c.seed;
    r.replicates = c.replicates;
    return r;
}

// Sup-norm trajectory of consecutive windows over a pre/post stream with t0
// pre-change samples followed by `post` post-change samples; entry k is the
// window ending at sample w + k.
std::vector<double> trajectory(const Matrix& transform, const Matrix& factor_pre, const Matrix& factor_post, Index t0,
                               Index post, Index w, std::uint64_t seed) {
    NormalSource src(seed);
    const Index p = transform.rows();
    const Matrix pre = factor_pre * src.matrix(p, t0);
    const Matrix after = factor_post * src.matrix(p, post);
    MomentWindow window(p, w);
    window.set_transform(transform);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(t0 + post - w + 1));
    for (Index i = 0; i < t0 + post; ++i) {
        window.push(i < t0 ? Vector(pre.col(i)) : Vector(after.col(i - t0)));
        if (window.full()) out.push_back(window.sup_norm());
    }
    return out;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::fa_calibration: return "fa-calibration";
        case ExperimentKind::plugin_calibration: return "plugin-calibration";
        case ExperimentKind::delay_profile: return "delay-profile";
        case ExperimentKind::power_curve: return "power";
        case ExperimentKind::delay_curve: return "delay-curve";
        case ExperimentKind::lcpd_block: return "lcpd-block";
    }
    return "fa-calibration";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
    std::string t = lower(text);
    std::replace(t.begin(), t.end(), '_', '-');
    if (t == "fa-calibration") return ExperimentKind::fa_calibration;
    if (t == "plugin-calibration") return ExperimentKind::plugin_calibration;
    if (t == "delay-profile") return ExperimentKind::delay_profile;
    if (t == "power" || t == "power-curve") return ExperimentKind::power_curve;
    if (t == "delay-curve") return ExperimentKind::delay_curve;
    if (t == "lcpd-block") return ExperimentKind::lcpd_block;
    throw InvalidConfig("unknown experiment kind '" + text + "'");
}

const std::vector<std::string>& experiment_keys() {
    static const std::vector<std::string> keys{
        "kind",   "replicates", "seed",   "model_seed", "model",  "p",         "rho0",  "density",
        "count_diagonal", "diag_inflation", "hubs", "spokes", "w", "n_burnin", "pi0", "threshold",
        "mode",   "clime_c",    "fits",   "t0",         "no_change", "n_grid", "w_grid", "s_grid",
        "beta_grid", "jobs"};
    return keys;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (key == "kind") {
        kind = parse_experiment_kind(value);
    } else if (key == "replicates") {
        replicates = parse_index(key, value);
    } else if (key == "seed") {
        seed = parse_seed(key, value);
    } else if (key == "model_seed") {
        model_seed = parse_seed(key, value);
    } else if (key == "model") {
        const std::string m = lower(value);
        if (m == "chain") {
            model = ModelKind::chain;
        } else if (m == "sparse") {
            model = ModelKind::sparse;
        } else if (m == "hub") {
            model = ModelKind::hub;
        } else {
            throw InvalidConfig("unknown model '" + value + "'");
        }
    } else if (key == "p") {
        p = parse_index(key, value);
    } else if (key == "rho0") {
        rho0 = parse_real(key, value);
    } else if (key == "density") {
        density = parse_real(key, value);
    } else if (key == "count_diagonal") {
        count_diagonal = parse_bool(key, value);
    } else if (key == "diag_inflation") {
        diag_inflation = parse_real(key, value);
    } else if (key == "hubs") {
        hubs = parse_index(key, value);
    } else if (key == "spokes") {
        spokes = parse_index(key, value);
    } else if (key == "w") {
        w = parse_index(key, value);
    } else if (key == "n_burnin") {
        n_burnin = parse_index(key, value);
    } else if (key == "pi0") {
        pi0 = parse_real(key, value);
    } else if (key == "threshold") {
        threshold = parse_threshold_method(value);
    } else if (key == "mode") {
        const std::string m = lower(value);
        if (m == "oracle") {
            mode = StatMode::oracle;
        } else if (m == "plugin") {
            mode = StatMode::plugin;
        } else {
            throw InvalidConfig("unknown mode '" + value + "'");
        }
    } else if (key == "clime_c") {
        clime_c = parse_real(key, value);
    } else if (key == "fits") {
        fits = parse_index(key, value);
    } else if (key == "t0") {
        t0 = parse_index(key, value);
    } else if (key == "no_change") {
        no_change = parse_bool(key, value);
    } else if (key == "n_grid") {
        n_grid = parse_index_list(key, value);
    } else if (key == "w_grid") {
        w_grid = parse_index_list(key, value);
    } else if (key == "s_grid") {
        s_grid = parse_index_list(key, value);
    } else if (key == "beta_grid") {
        beta_grid = parse_real_list(key, value);
    } else if (key == "jobs") {
        jobs = static_cast<int>(parse_index(key, value));
    } else {
        throw InvalidConfig("unknown experiment key '" + key + "'");
    }
}

void ExperimentConfig::apply(const KeyValues& values) {
    for (const auto& [k, v] : values) set(k, v);
}

void ExperimentConfig::validate() const {
    if (replicates < 1) throw InvalidConfig("replicates must be at least 1");
    if (p < 2) throw InvalidConfig("p must be at least 2");
    if (w < 2) throw InvalidConfig("w must be at least 2");
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw InvalidConfig("pi0 must lie in (0, 1)");
    if (!(density > 0.0 && density <= 1.0)) throw InvalidConfig("density must lie in (0, 1]");
    if (!(diag_inflation >= 0.0)) throw InvalidConfig("diag_inflation must be nonnegative");
    if (!(clime_c >= 0.0)) throw InvalidConfig("clime_c must be nonnegative");
    if (fits < 1) throw InvalidConfig("fits must be at least 1");
    if (jobs < 1) throw InvalidConfig("jobs must be at least 1");
    if (mode == StatMode::plugin && n_burnin < 2) throw InvalidConfig("n_burnin must be at least 2 in plug-in mode");
    if (t0 < 0) throw InvalidConfig("t0 must be nonnegative");
    switch (kind) {
        case ExperimentKind::plugin_calibration:
            if (n_grid.empty()) throw InvalidConfig("n_grid must be nonempty");
            for (const Index n : n_grid) {
                if (n < 2) throw InvalidConfig("n_grid entries must be at least 2");
            }
            break;
        case ExperimentKind::power_curve:
        case ExperimentKind::lcpd_block:
        case ExperimentKind::delay_curve:
            if (s_grid.empty() || beta_grid.empty()) throw InvalidConfig("s_grid and beta_grid must be nonempty");
            for (const Index s : s_grid) {
                if (s < 1 || s > p) throw InvalidConfig("s_grid entries must lie in [1, p]");
                if (kind == ExperimentKind::lcpd_block && 2 * s > p) throw InvalidConfig("lcpd-block needs 2s <= p");
            }
            for (const Index ww : w_grid) {
                if (ww < 2) throw InvalidConfig("w_grid entries must be at least 2");
            }
            break;
        default: break;
    }
}

KeyValues ExperimentConfig::echo() const {
    return {{"kind", to_string(kind)},
            {"preset", preset},
            {"replicates", std::to_string(replicates)},
            {"seed", std::to_string(seed)},
            {"model_seed", std::to_string(model_seed)},
            {"model", model_name(model)},
            {"p", std::to_string(p)},
            {"rho0", format_double(rho0)},
            {"density", format_double(density)},
            {"count_diagonal", count_diagonal ? "true" : "false"},
            {"diag_inflation", format_double(diag_inflation)},
            {"hubs", std::to_string(hubs)},
            {"spokes", std::to_string(spokes)},
            {"w", std::to_string(w)},
            {"n_burnin", std::to_string(n_burnin)},
            {"pi0", format_double(pi0)},
            {"threshold", to_string(threshold)},
            {"mode", mode_name(mode)},
            {"clime_c", format_double(clime_c)},
            {"fits", std::to_string(fits)},
            {"t0", std::to_string(t0)},
            {"no_change", no_change ? "true" : "false"},
            {"n_grid", join(n_grid)},
            {"w_grid", join(w_grid)},
            {"s_grid", join(s_grid)},
            {"beta_grid", join(beta_grid)}};
}

std::vector<std::string> preset_names() {
    return {"fig1-desk", "fig2-desk", "table1-desk", "fig3-desk", "fig4-desk", "fig5-desk", "fig6-desk"};
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    c.preset = name;
    if (name == "fig1-desk") {
        c.kind = ExperimentKind::fa_calibration;
        c.model = ModelKind::chain;
        c.p = 100;
        c.rho0 = 0.5;
        c.w = 50;
        c.mode = StatMode::oracle;
        c.replicates = 10000;
    } else if (name == "fig2-desk") {
        c.kind = ExperimentKind::plugin_calibration;
        c.p = 80;
        c.density = 0.06;
        c.count_diagonal = true;
        c.w = 50;
        c.n_grid = {300};
        c.fits = 1;
        c.replicates = 10000;
    } else if (name == "table1-desk") {
        c.kind = ExperimentKind::plugin_calibration;
        c.p = 80;
        c.density = 0.06;
        c.count_diagonal = true;
        c.w = 40;
        c.n_grid = {200, 300, 400, 500, 600, 700};
        c.fits = 10;
        c.replicates = 10000;
    } else if (name == "fig3-desk") {
        c.kind = ExperimentKind::delay_profile;
        c.p = 100;
        c.density = 0.04;
        c.n_burnin = 300;
        c.t0 = 100;
        c.w = 75;
        c.replicates = 1000;
    } else if (name == "fig4-desk") {
        c.kind = ExperimentKind::power_curve;
        c.p = 100;
        c.density = 0.05;
        c.n_burnin = 300;
        c.w = 150;
        c.s_grid = {1, 2, 3};
        c.beta_grid = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0};
        c.replicates = 1000;
    } else if (name == "fig5-desk") {
        c.kind = ExperimentKind::power_curve;
        c.p = 100;
        c.density = 0.05;
        c.n_burnin = 300;
        c.s_grid = {1, 2, 3};
        c.beta_grid = {3.0};
        c.w_grid = {60, 100, 150, 200, 250, 300};
        c.replicates = 1000;
    } else if (name == "fig6-desk") {
        c.kind = ExperimentKind::lcpd_block;
        c.p = 100;
        c.density = 0.0472;
        c.diag_inflation = 1.1;
        c.w = 100;
        c.mode = StatMode::oracle;
        c.s_grid = {1, 5, 20};
        c.beta_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
        c.replicates = 1000;
    } else {
        throw InvalidConfig("unknown preset '" + name + "'");
    }
    return c;
}

const Metric& CellResult::metric(const std::string& name) const {
    for (const auto& m : metrics) {
        if (m.name == name) return m;
    }
    throw std::out_of_range("no metric '" + name + "' in cell " + cell);
}

double CellResult::se(const std::string& name) const {
    const auto& m = metric(name);
    return m.se ? *m.se : kNaN;
}

const CellResult& ExperimentResult::cell(const std::string& label) const {
    for (const auto& c : cells) {
        if (c.cell == label) return c;
    }
    throw std::out_of_range("no cell '" + label + "'");
}

Metric rate_metric(std::string name, Index hits, Index n) {
    const double r = n > 0 ? static_cast<double>(hits) / static_cast<double>(n) : kNaN;
    return Metric{std::move(name), r, std::sqrt(r * (1.0 - r) / static_cast<double>(n)), n};
}

void parallel_for(Index n, int jobs, const std::function<void(Index)>& fn) {
    const Index workers = std::min<Index>(std::max(jobs, 1), n);
    if (workers <= 1) {
        for (Index i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
    {
        std::vector<std::jthread> pool;
        for (Index k = 0; k < workers; ++k) {
            pool.emplace_back([&, k] {
                try {
                    for (Index i = next++; i < n; i = next++) fn(i);
                } catch (...) {
                    failures[static_cast<std::size_t>(k)] = std::current_exception();
                    next = n;
                }
            });
        }
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
}

PrecisionMatrix build_model(const ExperimentConfig& c) {
    switch (c.model) {
        case ModelKind::chain: return gen_chain_precision(c.p, c.rho0);
        case ModelKind::hub: return gen_hub_precision(c.p, c.hubs, c.spokes, c.model_seed, sparse_options(c));
        case ModelKind::sparse: break;
    }
    return gen_random_sparse(c.p, c.density, c.model_seed, sparse_options(c), c.count_diagonal);
}

ExperimentResult fa_calibration(const ExperimentConfig& c) {
    c.validate();
    const PrecisionMatrix omega = build_model(c);
    const Matrix factor = omega.covariance_factor();
    const std::string label = "fa";
    std::vector<double> stats(static_cast<std::size_t>(c.replicates));
    parallel_for(c.replicates, c.jobs, [&](Index r) {
        NormalSource src(derive_seed(c.seed, label_hash(label), static_cast<std::uint64_t>(r)));
        const Matrix x = factor * src.matrix(c.p, c.w);
        stats[static_cast<std::size_t>(r)] = oracle_statistic(omega, SampleWindow(x)).sup_norm;
    });

    ExperimentResult result = new_result(c);
    CellResult cell = make_cell({{"p", double(c.p)}, {"w", double(c.w)}, {"pi0", c.pi0}});
    const double z_exact = critical_value_exact(c.pi0, c.p, c.w);
    const double z_asym = critical_value_asymptotic(c.pi0, c.p);
    cell.metrics.push_back(value_metric("zeta_exact", z_exact));
    cell.metrics.push_back(value_metric("zeta_asymptotic", z_asym));
    cell.metrics.push_back(rate_metric("exceed_exact", count_at_least(stats, z_exact), c.replicates));
    cell.metrics.push_back(rate_metric("exceed_asymptotic", count_at_least(stats, z_asym), c.replicates));
    if (c.pi0 < 0.5) {
        const double z_union = critical_value_union(c.pi0, c.p);
        cell.metrics.push_back(value_metric("zeta_union", z_union));
        cell.metrics.push_back(rate_metric("exceed_union", count_at_least(stats, z_union), c.replicates));
    }
    cell.metrics.push_back(value_metric("quantile", empirical_quantile(stats, 1.0 - c.pi0), c.replicates));
    cell.metrics.push_back(mean_metric("mean_stat", stats));
    result.cells.push_back(std::move(cell));
    return result;
}

ExperimentResult plugin_calibration(const ExperimentConfig& c) {
    c.validate();
    const PrecisionMatrix omega = build_model(c);
    const Matrix factor = omega.covariance_factor();
    const Index n_max = *std::max_element(c.n_grid.begin(), c.n_grid.end());
    const std::size_t cells = c.n_grid.size();

    // fits x cells estimates, each fit nested over the N grid.
    std::vector<std::vector<Matrix>> estimates(static_cast<std::size_t>(c.fits), std::vector<Matrix>(cells));
    std::vector<std::vector<double>> errors(cells, std::vector<double>(static_cast<std::size_t>(c.fits)));
    const ClimeConfig cc = clime_config(c);
    parallel_for(c.fits * static_cast<Index>(cells), c.jobs, [&](Index job) {
        const auto f = static_cast<std::size_t>(job / static_cast<Index>(cells));
        const auto k = static_cast<std::size_t>(job % static_cast<Index>(cells));
        const Matrix data = burn_in_samples(c, omega, static_cast<Index>(f), n_max);
        Matrix est = clime_estimate(data.leftCols(c.n_grid[k]), cc).omega_hat;
        errors[k][f] = normalized_error(est, omega.entries());
        estimates[f][k] = std::move(est);
    });

    // Windows are shared by every N cell; replicate r uses fit r mod fits.
    std::vector<std::vector<double>> stats(cells + 1, std::vector<double>(static_cast<std::size_t>(c.replicates)));
    parallel_for(c.replicates, c.jobs, [&](Index r) {
        NormalSource src(derive_seed(c.seed, label_hash("window"), static_cast<std::uint64_t>(r)));
        const SampleWindow window(factor * src.matrix(c.p, c.w));
        const auto f = static_cast<std::size_t>(r % c.fits);
        for (std::size_t k = 0; k < cells; ++k) {
            stats[k][static_cast<std::size_t>(r)] = plugin_statistic(estimates[f][k], window).sup_norm;
        }
        stats[cells][static_cast<std::size_t>(r)] = oracle_statistic(omega, window).sup_norm;
    });

    const double zeta = zeta_for(c, c.w);
    ExperimentResult result = new_result(c);
    auto fill = [&](CellResult cell, const std::vector<double>& s) {
        const Index below = c.replicates - count_at_least(s, zeta);
        cell.metrics.push_back(value_metric("zeta", zeta));
        cell.metrics.push_back(rate_metric("p_n", below, c.replicates));
        cell.metrics.push_back(value_metric("quantile", empirical_quantile(s, 1.0 - c.pi0), c.replicates));
        return cell;
    };
    for (std::size_t k = 0; k < cells; ++k) {
        CellResult cell = fill(make_cell({{"N", double(c.n_grid[k])}}), stats[k]);
        cell.metrics.push_back(mean_metric("e_n", errors[k]));
        result.cells.push_back(std::move(cell));
    }
    result.cells.push_back(fill(make_cell({{"oracle", 1.0}}), stats[cells]));
    return result;
}

ExperimentResult delay_profile(const ExperimentConfig& c) {
    c.validate();
    const PrecisionMatrix pre = build_model(c);
    const PrecisionMatrix post = c.no_change ? pre : build_post_model(c);
    const Transform tr = pick_transform(c, pre);
    const Matrix factor_pre = pre.covariance_factor();
    const Matrix factor_post = post.covariance_factor();
    const double zeta = zeta_for(c, c.w);
    const Index steps = c.t0 + 1;  // t = -t0 .. 0

    std::vector<std::vector<double>> traj(static_cast<std::size_t>(c.replicates));
    parallel_for(c.replicates, c.jobs, [&](Index r) {
        traj[static_cast<std::size_t>(r)] = trajectory(tr.omega, factor_pre, factor_post, c.t0, c.w, c.w,
                                                       derive_seed(c.seed, label_hash("trajectory"), r));
    });

    ExperimentResult result = new_result(c);
    std::vector<double> mean(static_cast<std::size_t>(steps));
    for (Index k = 0; k < steps; ++k) {
        std::vector<double> column(traj.size());
        for (std::size_t r = 0; r < traj.size(); ++r) column[r] = traj[r][static_cast<std::size_t>(k)];
        CellResult cell = make_cell({{"t", double(k - c.t0)}});
        Metric m = mean_metric("mean_stat", column);
        mean[static_cast<std::size_t>(k)] = m.value;
        cell.metrics.push_back(std::move(m));
        cell.metrics.push_back(rate_metric("exceed", count_at_least(column, zeta), c.replicates));
        result.cells.push_back(std::move(cell));
    }

    // First crossing per replicate. Relative time t = k - t0; the window ending
    // there holds max(0, t + w) post-change samples.
    Index false_alarms = 0;
    Index misses = 0;
    std::vector<double> delays;
    for (const auto& tr_r : traj) {
        const auto it = std::find_if(tr_r.begin(), tr_r.end(), [zeta](double s) { return s >= zeta; });
        if (it == tr_r.end()) {
            ++misses;
            continue;
        }
        const Index t = static_cast<Index>(it - tr_r.begin()) - c.t0;
        if (t + c.w <= 0) {
            ++false_alarms;
        } else {
            delays.push_back(static_cast<double>(t + c.w));
        }
    }
    const auto mean_cross = std::find_if(mean.begin(), mean.end(), [zeta](double s) { return s >= zeta; });
    const double cross_t =
        mean_cross == mean.end() ? kNaN : static_cast<double>(mean_cross - mean.begin()) - static_cast<double>(c.t0);

    CellResult summary = make_cell({});
    summary.cell = "summary";
    summary.metrics.push_back(value_metric("zeta", zeta));
    summary.metrics.push_back(value_metric("e_n", tr.ehat));
    summary.metrics.push_back(rate_metric("false_alarm_rate", false_alarms, c.replicates));
    summary.metrics.push_back(rate_metric("miss_rate", misses, c.replicates));
    if (!delays.empty()) {
        summary.metrics.push_back(mean_metric("mean_delay", delays));
    } else {
        summary.metrics.push_back(value_metric("mean_delay", kNaN));
    }
    summary.metrics.push_back(value_metric("start_mean_stat", mean.front()));
    summary.metrics.push_back(value_metric("end_mean_stat", mean.back()));
    summary.metrics.push_back(value_metric("mean_crossing_t", cross_t));
    summary.metrics.push_back(value_metric("mean_crossing_delay", cross_t + static_cast<double>(c.w)));
    result.cells.push_back(std::move(summary));
    return result;
}

namespace {

using ChangeFn = PrecisionMatrix (*)(const PrecisionMatrix&, Index, double);

// π1 over (s, β) or (s, w) cells: one full post-change window per replicate.
ExperimentResult miss_rate_grid(const ExperimentConfig& c, ChangeFn change) {
    c.validate();
    const PrecisionMatrix pre = build_model(c);
    const Transform tr = pick_transform(c, pre);
    const std::vector<Index> ws = c.w_grid.empty() ? std::vector<Index>{c.w} : c.w_grid;
    const bool sweep_w = !c.w_grid.empty();

    ExperimentResult result = new_result(c);
    for (const Index s : c.s_grid) {
        for (const double beta : c.beta_grid) {
            const PrecisionMatrix post = change(pre, s, beta);
            const Matrix factor = post.covariance_factor();
            const double delta = change_signal(pre, post.covariance()).sup_norm;
            for (const Index w : ws) {
                std::vector<std::pair<std::string, double>> params{{"s", double(s)}, {"beta", beta}};
                if (sweep_w) params.emplace_back("w", double(w));
                CellResult cell = make_cell(std::move(params));
                const double zeta = zeta_for(c, w);
                // Common random numbers: replicate r reuses its normals in every cell,
                // and a shorter window is a prefix of a longer one.
                const std::uint64_t cell_id = label_hash("power");
                std::vector<double> stats(static_cast<std::size_t>(c.replicates));
                parallel_for(c.replicates, c.jobs, [&](Index r) {
                    NormalSource src(derive_seed(c.seed, cell_id, static_cast<std::uint64_t>(r)));
                    stats[static_cast<std::size_t>(r)] = window_statistic(tr.omega, factor * src.matrix(c.p, w));
                });
                cell.metrics.push_back(value_metric("zeta", zeta));
                cell.metrics.push_back(value_metric("delta_sup", delta));
                cell.metrics.push_back(rate_metric("pi1", c.replicates - count_at_least(stats, zeta), c.replicates));
                cell.metrics.push_back(mean_metric("mean_stat", stats));
                if (c.mode == StatMode::plugin) cell.metrics.push_back(value_metric("e_n", tr.ehat));
                result.cells.push_back(std::move(cell));
            }
        }
    }
    return result;
}

}  // namespace

ExperimentResult power_curve(const ExperimentConfig& c) { return miss_rate_grid(c, &make_block_change); }

ExperimentResult lcpd_block_power(const ExperimentConfig& c) { return miss_rate_grid(c, &make_antidiag_change); }

ExperimentResult delay_curve(const ExperimentConfig& c) {
    c.validate();
    const PrecisionMatrix pre = build_model(c);
    const Transform tr = pick_transform(c, pre);
    const Matrix factor_pre = pre.covariance_factor();
    const double zeta = zeta_for(c, c.w);
    const Index post_len = 2 * c.w;  // windows up to w samples past full post-change coverage

    ExperimentResult result = new_result(c);
    for (const Index s : c.s_grid) {
        for (const double beta : c.beta_grid) {
            const PrecisionMatrix post = make_block_change(pre, s, beta);
            const Matrix factor_post = post.covariance_factor();
            CellResult cell = make_cell({{"s", double(s)}, {"beta", beta}});
            const std::uint64_t cell_id = label_hash(cell.cell);
            std::vector<double> first(static_cast<std::size_t>(c.replicates));
            parallel_for(c.replicates, c.jobs, [&](Index r) {
                const auto traj =
                    trajectory(tr.omega, factor_pre, factor_post, c.t0, post_len, c.w, derive_seed(c.seed, cell_id, r));
                const auto it = std::find_if(traj.begin(), traj.end(), [zeta](double v) { return v >= zeta; });
                first[static_cast<std::size_t>(r)] =
                    it == traj.end() ? kNaN : static_cast<double>(it - traj.begin()) - static_cast<double>(c.t0);
            });
            Index false_alarms = 0;
            Index misses = 0;
            std::vector<double> delays;
            for (const double t : first) {
                if (std::isnan(t)) {
                    ++misses;
                } else if (t + static_cast<double>(c.w) <= 0.0) {
                    ++false_alarms;
                } else {
                    delays.push_back(t + static_cast<double>(c.w));
                }
            }
            cell.metrics.push_back(value_metric("zeta", zeta));
            cell.metrics.push_back(rate_metric("false_alarm_rate", false_alarms, c.replicates));
            cell.metrics.push_back(rate_metric("miss_rate", misses, c.replicates));
            cell.metrics.push_back(delays.empty() ? value_metric("mean_delay", kNaN) : mean_metric("mean_delay", delays));
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& c) {
    switch (c.kind) {
        case ExperimentKind::fa_calibration: return fa_calibration(c);
        case ExperimentKind::plugin_calibration: return plugin_calibration(c);
        case ExperimentKind::delay_profile: return delay_profile(c);
        case ExperimentKind::power_curve: return power_curve(c);
        case ExperimentKind::delay_curve: return delay_curve(c);
        case ExperimentKind::lcpd_block: return lcpd_block_power(c);
    }
    throw InvalidConfig("unknown experiment kind");
}

void write_csv(std::ostream& out, const ExperimentResult& result) {
    out << "kind,cell,metric,value,se,n\n";
    const std::string kind = to_string(result.kind);
    for (const auto& cell : result.cells) {
        for (const auto& m : cell.metrics) {
            out << kind << ',' << cell.cell << ',' << m.name << ',' << format_double(m.value) << ','
                << (m.se ? format_double(*m.se) : std::string()) << ',' << m.n << '\n';
        }
    }
}

void write_ndjson(std::ostream& out, const ExperimentResult& result) {
    const std::string kind = to_string(result.kind);
    auto number = [](double v) -> nlohmann::ordered_json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    for (const auto& cell : result.cells) {
        nlohmann::ordered_json j;
        j["kind"] = kind;
        j["cell"] = cell.cell;
        nlohmann::ordered_json params = nlohmann::ordered_json::object();
        for (const auto& [k, v] : cell.params) params[k] = number(v);
        j["params"] = params;
        nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
        for (const auto& m : cell.metrics) {
            metrics[m.name] = {{"value", number(m.value)}, {"se", m.se ? number(*m.se) : nullptr}, {"n", m.n}};
        }
        j["metrics"] = metrics;
        j["seed"] = result.seed;
        j["replicates"] = result.replicates;
        out << j.dump() << '\n';
    }
}

}  // namespace lcpd
