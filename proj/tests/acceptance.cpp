// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lcpd/clime.hpp"
#include "lcpd/linalg.hpp"
#include "lcpd/harness.hpp"
#include "lcpd/modelgen.hpp"
#include "lcpd/special.hpp"
#include "lcpd/statistic.hpp"
#include "lcpd/threshold.hpp"
#include "lp_oracle.hpp"

using namespace lcpd;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "!") + what;
    }
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

int jobs() { return static_cast<int>(std::max(1U, std::thread::hardware_concurrency())); }

ExperimentResult run_preset(const std::string& name, const KeyValues& overrides = {}) {
    ExperimentConfig c = preset(name);
    c.apply(overrides);
    c.jobs = jobs();
    return run_experiment(c);
}

// π1 cells of a sweep as a grid: rows follow the outer parameter, columns the inner one.
struct Grid {
    std::vector<double> outer;
    std::vector<std::vector<const CellResult*>> rows;
};

Grid group(const ExperimentResult& r, const std::string& outer_key) {
    Grid g;
    for (const auto& cell : r.cells) {
        double key = 0.0;
        for (const auto& [k, v] : cell.params) {
            if (k == outer_key) key = v;
        }
        if (g.outer.empty() || g.outer.back() != key) {
            g.outer.push_back(key);
            g.rows.emplace_back();
        }
        g.rows.back().push_back(&cell);
    }
    return g;
}

// π1 must not rise along each row by more than 2 combined SE.
void check_nonincreasing(Outcome& o, const std::string& label, const Grid& g) {
    for (std::size_t i = 0; i < g.rows.size(); ++i) {
        const auto& row = g.rows[i];
        double worst = -1.0;
        for (std::size_t k = 1; k < row.size(); ++k) {
            const double a = row[k - 1]->value("pi1");
            const double b = row[k]->value("pi1");
            const double se = std::hypot(row[k - 1]->se("pi1"), row[k]->se("pi1"));
            worst = std::max(worst, b - a - 2.0 * se);
        }
        o.check(worst <= 0.0, label + fmt(" s=%g monotone", g.outer[i]));
    }
}

// ---- criteria ----------------------------------------------------------

Outcome closed_form_thresholds() {
    Outcome o;
    const double a = critical_value_asymptotic(0.05, 100);
    const double u = critical_value_union(0.05, 100);
    o.check(std::abs(a - 4.4392) <= 1e-3, fmt("asymptotic %.6f", a));
    o.check(std::abs(u - 4.4422) <= 1e-3, fmt("union %.6f", u));
    return o;
}

Outcome theta_tail_vs_simulation() {
    // Direct simulation of <X, Y>/√w with independent X, Y ~ N(0, I_w).
    constexpr Index w = 50;
    constexpr Index chunks = 200;
    constexpr Index per_chunk = 50000;
    const double n = static_cast<double>(chunks * per_chunk);
    std::vector<std::array<Index, 4>> hits(chunks);
    parallel_for(chunks, jobs(), [&](Index k) {
        NormalSource src(derive_seed(2024, label_hash("theta-mc"), static_cast<std::uint64_t>(k)));
        std::array<Index, 4> h{};
        const double scale = 1.0 / std::sqrt(static_cast<double>(w));
        for (Index r = 0; r < per_chunk; ++r) {
            double dot = 0.0;
            for (Index i = 0; i < w; ++i) {
                const double x = src.next();
                dot += x * src.next();
            }
            const double v = std::abs(dot) * scale;
            for (int t = 0; t < 4; ++t) h[static_cast<std::size_t>(t)] += v >= t + 1 ? 1 : 0;
        }
        hits[static_cast<std::size_t>(k)] = h;
    });
    Outcome o;
    for (int t = 0; t < 4; ++t) {
        Index total = 0;
        for (const auto& h : hits) total += h[static_cast<std::size_t>(t)];
        const double mc = static_cast<double>(total) / n;
        const double se = std::sqrt(mc * (1.0 - mc) / n);
        const double q = theta_tail(w, t + 1.0);
        o.check(std::abs(q - mc) <= 3.0 * se, fmt("t=%g quad %.4e mc %.4e (%.1f se)", t + 1.0, q, mc, (q - mc) / se));
    }
    const double ratio = theta_tail(10000, 3.0) / (2.0 * normal_sf(3.0));
    o.check(ratio >= 0.98 && ratio <= 1.05, fmt("w=1e4 ratio %.5f", ratio));
    return o;
}

Outcome null_calibration() {
    const auto r = run_preset("fig1-desk");
    const auto& cell = r.cells.front();
    const double exceed = cell.value("exceed_exact");
    const double q = cell.value("quantile");
    const double z_exact = cell.value("zeta_exact");
    const double z_union = cell.value("zeta_union");
    Outcome o;
    o.check(std::abs(exceed - 0.05) <= 0.0087, fmt("exceed_exact %.4f", exceed));
    o.check(std::abs(q - z_exact) < std::abs(q - z_union),
            fmt("quantile %.4f exact %.4f union %.4f", q, z_exact, z_union));
    return o;
}

Outcome statistic_identities() {
    Outcome o;
    const auto chain = gen_chain_precision(100, 0.5);
    const SampleWindow zero(Matrix::Zero(100, 50));
    const double sup = oracle_statistic(chain, zero).sup_norm;
    o.check(std::abs(sup - std::sqrt(25.0)) <= 1e-12, fmt("zero window sup %.15g", sup));

    const auto omega = gen_random_sparse(80, 0.06, 7, {}, true);
    NormalSource src(5);
    const SampleWindow window(sample_gaussian(omega.covariance_factor(), src, 40));
    const auto a = oracle_statistic(omega, window);
    const auto b = plugin_statistic(omega.entries(), window);
    o.check(a.entries == b.entries && a.sup_norm == b.sup_norm, "plug-in with truth equals oracle bitwise");
    return o;
}

Outcome change_signal_identities() {
    Outcome o;
    const auto pre = gen_random_sparse(100, 0.05, 7);
    o.check(change_signal(pre, pre.covariance()).sup_norm <= 1e-12, "no change gives zero");
    double worst = 0.0;
    for (const Index s : {1, 2, 3}) {
        for (const double beta : {0.5, 2.0}) {
            const auto post = make_block_change(pre, s, beta);
            const Matrix d = post.entries() - pre.entries();
            const Matrix expected = (-d + d * post.covariance() * d).cwiseProduct(scale_matrix(pre.entries()));
            worst = std::max(worst, max_abs(Matrix(change_signal(pre, post.covariance()).entries - expected)));
            worst = std::max(worst, std::abs(d.norm() - beta));
        }
    }
    o.check(worst <= 1e-10, fmt("block change identity err %.2e", worst));
    const auto unit = gen_chain_precision(30, 0.4);
    double uerr = 0.0;
    for (const double beta : {-0.5, 0.5, 2.0}) {
        const auto post = make_uniform_change(unit, beta);
        uerr = std::max(uerr, std::abs(change_signal(unit, post.covariance()).sup_norm - std::abs(beta) / std::sqrt(2.0)));
    }
    o.check(uerr <= 1e-10, fmt("uniform change sup err %.2e", uerr));
    return o;
}

Outcome clime_solver() {
    Outcome o;
    double worst = 0.0;
    int solved = 0;
    for (const Index p : {2, 3, 4}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            NormalSource src(seed * 31 + static_cast<std::uint64_t>(p));
            const Matrix s = sample_covariance(src.matrix(p, 8));
            for (const double lambda : {0.05, 0.2, 0.5}) {
                for (Index j = 0; j < p; ++j) {
                    const double expected = oracle::brute_force_clime(s, j, lambda);
                    if (std::isinf(expected)) continue;
                    worst = std::max(worst, std::abs(clime_column(s, j, lambda).lpNorm<1>() - expected));
                    ++solved;
                }
            }
        }
    }
    o.check(worst <= 1e-8, fmt("vertex enumeration max err %.2e over %g LPs", worst, solved));

    const auto omega = gen_random_sparse(80, 0.06, 7, {}, true);
    NormalSource src(11);
    const Matrix x = sample_gaussian(omega.covariance_factor(), src, 300);
    const auto est = clime_estimate(x, ClimeConfig{});
    o.check(est.feasibility_gap <= 1e-7, fmt("p=80 N=300 feasibility gap %.2e", est.feasibility_gap));
    const double lmin = min_eigenvalue(est.omega_hat);
    o.check(est.omega_hat == est.omega_hat.transpose() && lmin >= -1e-10, fmt("symmetric, min eig %.3e", lmin));
    o.detail += fmt("; error %.3f", normalized_error(est.omega_hat, omega.entries()));
    return o;
}

Outcome plugin_calibration_table() {
    const auto r = run_preset("table1-desk");
    Outcome o;
    std::vector<const CellResult*> cells;
    for (const auto& c : r.cells) {
        if (c.cell.rfind("N=", 0) == 0) cells.push_back(&c);
    }
    double worst = -1.0;
    std::string es;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        es += fmt(k ? " %.3f" : "%.3f", cells[k]->value("e_n"));
        if (k == 0) continue;
        const double rise = cells[k]->value("e_n") - cells[k - 1]->value("e_n");
        worst = std::max(worst, rise - 2.0 * std::hypot(cells[k]->se("e_n"), cells[k - 1]->se("e_n")));
    }
    o.check(worst <= 0.0, "e_N decreasing: " + es);
    const double p700 = r.cell("N=700").value("p_n");
    o.check(p700 >= 0.92 && p700 <= 0.97, fmt("p_700 %.4f", p700));
    return o;
}

Outcome power_monotonicity() {
    Outcome o;
    const KeyValues oracle{{"mode", "oracle"}};

    const auto fig4 = run_preset("fig4-desk", oracle);
    const Grid g4 = group(fig4, "s");
    check_nonincreasing(o, "fig4", g4);
    // Concentrated changes are easier to see.
    double worst = -1.0;
    const auto& s1 = g4.rows.front();
    const auto& s3 = g4.rows.back();
    for (std::size_t k = 0; k < s1.size(); ++k) {
        worst = std::max(worst, s1[k]->value("pi1") - s3[k]->value("pi1") -
                                    2.0 * std::hypot(s1[k]->se("pi1"), s3[k]->se("pi1")));
    }
    o.check(worst <= 0.0, "fig4 s=1 <= s=3");
    double null_dev = 0.0;
    for (const auto& row : g4.rows) {
        const auto* c = row.front();
        null_dev = std::max(null_dev, std::abs(c->value("pi1") - 0.95) / (4.0 * c->se("pi1")));
    }
    o.check(null_dev <= 1.0, fmt("beta=0 within 4 SE of 0.95 (max %.2f of band)", null_dev));

    check_nonincreasing(o, "fig5", group(run_preset("fig5-desk", oracle), "s"));
    check_nonincreasing(o, "fig6", group(run_preset("fig6-desk"), "s"));
    return o;
}

Outcome delay_profile_shape() {
    const auto r = run_preset("fig3-desk");
    const auto& summary = r.cell("summary");
    const double delay = summary.value("mean_delay");
    const double crossing = summary.value("mean_crossing_t");
    Outcome o;
    o.check(delay < 75.0, fmt("mean delay %.2f < w", delay));
    o.check(crossing < 0.0, fmt("mean crossing t %.1f < 0", crossing));
    o.check(delay >= 15.0 && delay <= 50.0, fmt("mean delay %.2f in [15, 50]", delay));
    return o;
}

Outcome determinism() {
    Outcome o;
    const std::vector<std::pair<std::string, KeyValues>> runs{
        {"fig1-desk", {{"replicates", "500"}}},
        {"table1-desk", {{"replicates", "300"}, {"fits", "2"}, {"n_grid", "200,300"}}},
        {"fig3-desk", {{"replicates", "100"}}},
        {"fig4-desk", {{"replicates", "100"}, {"beta_grid", "0,2"}}},
        {"fig5-desk", {{"replicates", "100"}, {"w_grid", "60,100"}, {"mode", "oracle"}}},
        {"fig6-desk", {{"replicates", "100"}, {"beta_grid", "0,0.3"}}},
    };
    for (const auto& [name, overrides] : runs) {
        std::string texts[2];
        int k = 0;
        for (const int j : {1, jobs() + 1}) {
            ExperimentConfig c = preset(name);
            c.apply(overrides);
            c.jobs = j;
            const auto r = run_experiment(c);
            std::ostringstream out;
            write_csv(out, r);
            write_ndjson(out, r);
            texts[k++] = out.str();
        }
        o.check(texts[0] == texts[1], name);
    }
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"C1 closed-form thresholds", closed_form_thresholds},
        {"C2 exact tail vs simulation", theta_tail_vs_simulation},
        {"C3 null calibration", null_calibration},
        {"C4 statistic identities", statistic_identities},
        {"C5 change signal identities", change_signal_identities},
        {"C6 CLIME solver", clime_solver},
        {"C7 plug-in calibration", plugin_calibration_table},
        {"C8 power monotonicity", power_monotonicity},
        {"C9 delay profile", delay_profile_shape},
        {"C10 determinism", determinism},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %s [%s] (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
