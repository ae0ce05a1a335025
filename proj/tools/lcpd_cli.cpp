// lcpd: generate models, resolve thresholds, monitor streams, run experiments.
//
// Exit codes: 0 success, 2 configuration or validation error, 3 data error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "lcpd/detector.hpp"
#include "lcpd/harness.hpp"
#include "lcpd/io.hpp"
#include "lcpd/modelgen.hpp"
#include "lcpd/threshold.hpp"

namespace {

using namespace lcpd;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

// Settings collected from a config file and then command-line flags; flags win.
class Settings {
public:
    void load_file(const std::string& path) {
        for (auto& [k, v] : read_config_file(path)) values_[k] = v;
    }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    [[nodiscard]] std::optional<std::string> get(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }
    [[nodiscard]] std::string get_or(const std::string& key, const std::string& fallback) const {
        return get(key).value_or(fallback);
    }
    [[nodiscard]] double real(const std::string& key, double fallback) const {
        const auto v = get(key);
        if (!v) return fallback;
        try {
            std::size_t used = 0;
            const double x = std::stod(*v, &used);
            if (used == v->size()) return x;
        } catch (const std::exception&) {
        }
        throw InvalidConfig("'" + key + "' expects a number, got '" + *v + "'");
    }
    [[nodiscard]] long long integer(const std::string& key, long long fallback) const {
        const auto v = get(key);
        if (!v) return fallback;
        try {
            std::size_t used = 0;
            const long long x = std::stoll(*v, &used);
            if (used == v->size()) return x;
        } catch (const std::exception&) {
        }
        throw InvalidConfig("'" + key + "' expects an integer, got '" + *v + "'");
    }
    [[nodiscard]] bool flag(const std::string& key, bool fallback) const {
        const auto v = get(key);
        if (!v) return fallback;
        if (*v == "1" || *v == "true" || *v == "yes" || *v == "on") return true;
        if (*v == "0" || *v == "false" || *v == "no" || *v == "off") return false;
        throw InvalidConfig("'" + key + "' expects a boolean, got '" + *v + "'");
    }
    [[nodiscard]] KeyValues all() const { return {values_.begin(), values_.end()}; }
    void keep_only(const std::vector<std::string>& keys) {
        for (const auto& [k, v] : values_) {
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
                throw InvalidConfig("unknown key '" + k + "'");
            }
        }
    }

private:
    std::map<std::string, std::string> values_;
};

// Registers one string option per key; after parsing, copies the ones given.
class KeyOptions {
public:
    KeyOptions(CLI::App* app, const std::vector<std::string>& keys) {
        for (const auto& k : keys) {
            if (k == "kind") continue;  // given positionally
            auto& slot = slots_[k];
            app->add_option("--" + k, slot, "");
        }
    }
    void merge_into(Settings& s) const {
        for (const auto& [k, v] : slots_) {
            if (v) s.set(k, *v);
        }
    }

private:
    std::map<std::string, std::optional<std::string>> slots_;
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidConfig("cannot open '" + path + "' for writing");
    out << text;
}

// ---- gen ---------------------------------------------------------------

const std::vector<std::string> kGenKeys{"p",      "rho",  "density", "seed",   "count_diagonal", "diag_inflation",
                                        "hubs",   "spokes", "weight_lo", "weight_hi", "out", "omega", "omega_post",
                                        "t0",     "length", "format"};

std::string render_matrix(const Matrix& m) {
    std::ostringstream out;
    write_matrix(out, m);
    return out.str();
}

int run_gen(const std::string& kind, const Settings& s, const std::string& config_path) {
    const std::string out_path = s.get_or("out", "-");
    SparseGenOptions opt;
    opt.diag_inflation = s.real("diag_inflation", opt.diag_inflation);
    opt.weight_lo = s.real("weight_lo", opt.weight_lo);
    opt.weight_hi = s.real("weight_hi", opt.weight_hi);
    const auto seed = static_cast<std::uint64_t>(s.integer("seed", 1));
    const Index p = s.integer("p", 100);

    std::string text;
    RunManifest manifest;
    if (kind == "chain") {
        text = render_matrix(gen_chain_precision(p, s.real("rho", 0.5)).entries());
    } else if (kind == "sparse") {
        const double density = s.real("density", 0.05);
        if (!(density > 0.0 && density <= 1.0)) throw InvalidConfig("density must lie in (0, 1]");
        text = render_matrix(gen_random_sparse(p, density, seed, opt, s.flag("count_diagonal", false)).entries());
    } else if (kind == "hub") {
        text = render_matrix(gen_hub_precision(p, s.integer("hubs", 4), s.integer("spokes", 20), seed, opt).entries());
    } else if (kind == "stream") {
        const auto pre_path = s.get("omega");
        if (!pre_path) throw InvalidConfig("gen stream needs --omega");
        const PrecisionMatrix pre(read_matrix_file(*pre_path));
        const auto post_path = s.get("omega_post");
        const PrecisionMatrix post = post_path ? PrecisionMatrix(read_matrix_file(*post_path)) : pre;
        if (post.p() != pre.p()) throw InvalidConfig("omega and omega_post differ in dimension");
        const Index length = s.integer("length", 1000);
        const Index t0 = s.integer("t0", length);
        if (length < 1 || t0 < 0) throw InvalidConfig("gen stream needs length >= 1 and t0 >= 0");
        const std::string format = s.get_or("format", "ndjson");
        if (format != "ndjson" && format != "csv") throw InvalidConfig("format must be ndjson or csv");
        const ChangeScenario scenario(pre, post, t0, 0, length);
        const Matrix x = sample_stream(scenario, seed, length);
        std::ostringstream out;
        for (Index t = 0; t < length; ++t) {
            if (format == "ndjson") {
                out << "{\"t\":" << t + 1 << ",\"x\":[";
            }
            for (Index i = 0; i < x.rows(); ++i) {
                if (i) out << ',';
                out << format_double(x(i, t));
            }
            out << (format == "ndjson" ? "]}\n" : "\n");
        }
        text = out.str();
        manifest.add_input(*pre_path);
        if (post_path) manifest.add_input(*post_path);
    } else {
        throw InvalidConfig("unknown generator '" + kind + "' (chain, sparse, hub, stream)");
    }

    if (out_path == "-") {
        std::cout << text;
        return 0;
    }
    write_text(out_path, text);
    manifest.command = "gen " + kind;
    manifest.config_path = config_path;
    manifest.master_seed = seed;
    manifest.settings = s.all();
    manifest.add_output(out_path);
    manifest.write(out_path + ".manifest.json");
    return 0;
}

// ---- threshold ---------------------------------------------------------

const std::vector<std::string> kThresholdKeys{"pi0", "p", "w"};

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

int run_threshold(const Settings& s, const std::string& config_path, const std::string& manifest_path) {
    const auto pi0_text = s.get("pi0");
    if (!pi0_text) throw InvalidConfig("threshold needs --pi0");
    const double pi0 = s.real("pi0", 0.05);
    const Index p = s.integer("p", 100);
    const Index w = s.integer("w", 50);
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw InvalidConfig("pi0 must lie in (0, 1)");
    if (p < 2 || w < 2) throw InvalidConfig("need p >= 2 and w >= 2");

    const double exact = critical_value_exact(pi0, p, w);
    const double asym = critical_value_asymptotic(pi0, p);
    std::cout << "exact=" << fixed6(exact) << '\n';
    std::cout << "asymptotic=" << fixed6(asym) << '\n';
    std::cout << "union=" << (pi0 < 0.5 ? fixed6(critical_value_union(pi0, p)) : std::string("undefined")) << '\n';

    if (!manifest_path.empty()) {
        RunManifest m;
        m.command = "threshold";
        m.config_path = config_path;
        m.settings = s.all();
        m.write(manifest_path);
    }
    return 0;
}

// ---- monitor -----------------------------------------------------------

const std::vector<std::string> kMonitorKeys{"omega",  "mode",    "n_burnin",    "w",          "batch",
                                            "pi0",    "threshold", "zeta",      "clime_c",    "lambda",
                                            "lambda_rule", "psd_project", "center", "input",  "p"};

DetectorConfig detector_config(const Settings& s, Index p, const std::optional<PrecisionMatrix>& omega) {
    DetectorConfig d;
    const std::string mode = s.get_or("mode", omega ? "oracle" : "plugin");
    if (mode != "oracle" && mode != "plugin") throw InvalidConfig("mode must be oracle or plugin");
    if (mode == "oracle") {
        if (!omega) throw InvalidConfig("oracle mode needs omega=<matrix file>");
        d.oracle_omega = omega;
    }
    d.n_burnin = s.integer("n_burnin", mode == "oracle" ? 0 : 300);
    d.w = s.integer("w", 50);
    const std::string batch = s.get_or("batch", "never");
    d.batch = batch == "never" ? kNeverUpdate : static_cast<Index>(s.integer("batch", 0));
    d.clime.c = s.real("clime_c", d.clime.c);
    if (s.get("lambda")) {
        d.clime.lambda = s.real("lambda", 0.0);
        d.clime.lambda_rule = LambdaRule::fixed;
    }
    const std::string rule = s.get_or("lambda_rule", d.clime.lambda_rule == LambdaRule::fixed ? "fixed" : "scaled");
    if (rule != "fixed" && rule != "scaled") throw InvalidConfig("lambda_rule must be fixed or scaled");
    d.clime.lambda_rule = rule == "fixed" ? LambdaRule::fixed : LambdaRule::scaled;
    d.clime.psd_project = s.flag("psd_project", true);
    d.clime.center = s.flag("center", false);

    d.threshold.pi0 = s.real("pi0", 0.05);
    d.threshold.p = p;
    d.threshold.w = d.w;
    d.threshold.method = parse_threshold_method(s.get_or("threshold", "exact"));
    if (s.get("zeta")) {
        d.threshold.zeta = s.real("zeta", 0.0);
    } else {
        if (!(d.threshold.pi0 > 0.0 && d.threshold.pi0 < 1.0)) throw InvalidConfig("pi0 must lie in (0, 1)");
        if (d.w < 2) throw InvalidConfig("w must be at least 2");
        d.threshold = resolve(d.threshold);
    }
    d.validate();
    return d;
}

int run_monitor(const Settings& s, const std::string& config_path, bool trace, const std::string& manifest_path) {
    std::optional<PrecisionMatrix> omega;
    const auto omega_path = s.get("omega");
    if (omega_path) omega.emplace(read_matrix_file(*omega_path));

    const std::string input = s.get_or("input", "-");
    std::ifstream file;
    if (input != "-") {
        file.open(input);
        if (!file) throw InvalidConfig("cannot open input '" + input + "'");
    }
    std::istream& in = input == "-" ? std::cin : file;

    Index p = omega ? omega->p() : static_cast<Index>(s.integer("p", 0));
    std::optional<Detector> detector;
    if (p > 0) detector.emplace(detector_config(s, p, omega));

    RowReader reader(in, p);
    while (auto obs = reader.next()) {
        if (!detector) {
            p = obs->x.size();
            detector.emplace(detector_config(s, p, omega));
        }
        const auto event = detector->step(obs->x);
        if (trace) {
            const auto& row = detector->last_trace();
            nlohmann::ordered_json j;
            j["t"] = row.t;
            j["stat"] = std::isnan(row.statistic) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(row.statistic);
            std::cout << j.dump() << '\n';
        }
        if (event) {
            nlohmann::ordered_json j;
            j["type"] = "change_point";
            j["t"] = event->t;
            j["stat"] = event->statistic;
            j["zeta"] = event->zeta;
            std::cout << j.dump() << '\n';
        }
        if (trace || event) std::cout.flush();
    }
    std::cout.flush();

    if (!manifest_path.empty()) {
        RunManifest m;
        m.command = "monitor";
        m.config_path = config_path;
        m.settings = s.all();
        if (omega_path) m.add_input(*omega_path);
        if (input != "-") m.add_input(input);
        m.write(manifest_path);
    }
    return 0;
}

// ---- experiment --------------------------------------------------------

int run_experiment_cmd(const std::string& kind, const std::string& preset_name, const Settings& s,
                       const std::string& config_path, const std::string& out_prefix) {
    ExperimentConfig cfg = preset_name.empty() ? ExperimentConfig{} : preset(preset_name);
    const ExperimentKind requested = parse_experiment_kind(kind);
    if (!preset_name.empty() && cfg.kind != requested) {
        throw InvalidConfig("preset '" + preset_name + "' is a " + to_string(cfg.kind) + " experiment");
    }
    cfg.kind = requested;
    cfg.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    cfg.apply(s.all());
    const ExperimentResult result = run_experiment(cfg);

    std::ostringstream csv;
    write_csv(csv, result);
    if (out_prefix.empty()) {
        std::cout << csv.str();
        return 0;
    }
    std::ostringstream ndjson;
    write_ndjson(ndjson, result);
    const std::string csv_path = out_prefix + ".csv";
    const std::string ndjson_path = out_prefix + ".ndjson";
    write_text(csv_path, csv.str());
    write_text(ndjson_path, ndjson.str());

    RunManifest m;
    m.command = "experiment " + to_string(requested);
    m.config_path = config_path;
    m.master_seed = cfg.seed;
    m.settings = cfg.echo();
    if (!config_path.empty()) m.add_input(config_path);
    m.add_output(csv_path);
    m.add_output(ndjson_path);
    m.write(out_prefix + ".manifest.json");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local change point detection for Gaussian graphical models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(lcpd::kToolVersion));

    std::string config_path;
    std::string manifest_path;
    bool trace = false;
    std::string gen_kind;
    std::string exp_kind;
    std::string preset_name;
    std::string out_prefix;

    auto* gen = app.add_subcommand("gen", "Generate a precision matrix or a sample stream");
    gen->add_option("kind", gen_kind, "chain | sparse | hub | stream")->required();
    gen->add_option("--config", config_path, "key=value config file");
    KeyOptions gen_keys(gen, kGenKeys);

    auto* thr = app.add_subcommand("threshold", "Print exact, asymptotic and union critical values");
    thr->add_option("--config", config_path, "key=value config file");
    thr->add_option("--manifest", manifest_path, "Write a run manifest here");
    KeyOptions thr_keys(thr, kThresholdKeys);

    auto* mon = app.add_subcommand("monitor", "Run the detector over a stream and emit NDJSON events");
    mon->add_option("--config", config_path, "key=value config file");
    mon->add_option("--manifest", manifest_path, "Write a run manifest here");
    mon->add_flag("--trace", trace, "Emit the statistic for every step");
    KeyOptions mon_keys(mon, kMonitorKeys);

    auto* exp = app.add_subcommand("experiment", "Run a Monte Carlo experiment");
    exp->add_option("kind", exp_kind, "fa-calibration | plugin-calibration | delay-profile | power | delay-curve | lcpd-block")
        ->required();
    exp->add_option("--preset", preset_name, "Named configuration");
    exp->add_option("--config", config_path, "key=value config file");
    exp->add_option("--out", out_prefix, "Output prefix for .csv, .ndjson and .manifest.json");
    KeyOptions exp_keys(exp, lcpd::experiment_keys());

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        Settings s;
        if (!config_path.empty()) s.load_file(config_path);
        if (*gen) {
            gen_keys.merge_into(s);
            s.keep_only(kGenKeys);
            return run_gen(gen_kind, s, config_path);
        }
        if (*thr) {
            thr_keys.merge_into(s);
            s.keep_only(kThresholdKeys);
            return run_threshold(s, config_path, manifest_path);
        }
        if (*mon) {
            mon_keys.merge_into(s);
            s.keep_only(kMonitorKeys);
            return run_monitor(s, config_path, trace, manifest_path);
        }
        exp_keys.merge_into(s);
        return run_experiment_cmd(exp_kind, preset_name, s, config_path, out_prefix);
    } catch (const lcpd::DataError& e) {
        std::cout.flush();
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cout.flush();
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}
