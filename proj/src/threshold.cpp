#include "lcpd/threshold.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>

#include "lcpd/special.hpp"

namespace lcpd {

namespace {

constexpr int kGaussOrder = 16;
constexpr double kQuantileCut = 1e-12;
constexpr double kRefineTol = 1e-12;
constexpr int kMaxPanels = 1 << 14;

struct GaussLegendre {
    std::array<double, kGaussOrder> x{};
    std::array<double, kGaussOrder> w{};
};

// Nodes and weights on [-1, 1] by Newton iteration on P_n.
GaussLegendre make_gauss_legendre() {
    GaussLegendre rule;
    const int n = kGaussOrder;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        rule.x[i] = -z;
        rule.x[n - 1 - i] = z;
        rule.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.w[n - 1 - i] = rule.w[i];
    }
    return rule;
}

const GaussLegendre& gauss_legendre() {
    static const GaussLegendre rule = make_gauss_legendre();
    return rule;
}

// log density of χ_w at v > 0.
double log_chi_density(double w, double v) {
    return (w - 1.0) * std::log(v) - 0.5 * v * v - (0.5 * w - 1.0) * std::log(2.0) - std::lgamma(0.5 * w);
}

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

Rule composite_rule(double w, double lo, double hi, int panels) {
    const auto& gl = gauss_legendre();
    Rule rule;
    rule.nodes.reserve(static_cast<std::size_t>(panels) * kGaussOrder);
    rule.weights.reserve(rule.nodes.capacity());
    const double width = (hi - lo) / panels;
    double total = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double a = lo + k * width;
        for (int i = 0; i < kGaussOrder; ++i) {
            const double v = a + 0.5 * width * (gl.x[i] + 1.0);
            const double weight = 0.5 * width * gl.w[i] * std::exp(log_chi_density(w, v));
            rule.nodes.push_back(v);
            rule.weights.push_back(weight);
            total += weight;
        }
    }
    for (double& weight : rule.weights) weight /= total;
    return rule;
}

double apply_rule(const std::vector<double>& nodes, const std::vector<double>& weights, double t, double sqrt_w) {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        sum += weights[i] * 2.0 * normal_sf(t * sqrt_w / nodes[i]);
    }
    return sum;
}

}  // namespace

ThetaTail::ThetaTail(Index w) : w_(w) {
    if (w < 1) throw InvalidConfig("ThetaTail: w must be at least 1");
    const double dof = static_cast<double>(w);
    const double lo = std::sqrt(chi_square_quantile(dof, kQuantileCut));
    const double hi = std::sqrt(chi_square_upper_quantile(dof, kQuantileCut));
    const double sqrt_w = std::sqrt(dof);
    const std::array<double, 9> probes{0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};

    Rule current = composite_rule(dof, lo, hi, 8);
    for (int panels = 16; panels <= kMaxPanels; panels *= 2) {
        Rule finer = composite_rule(dof, lo, hi, panels);
        double worst = 0.0;
        for (const double t : probes) {
            const double a = apply_rule(current.nodes, current.weights, t, sqrt_w);
            const double b = apply_rule(finer.nodes, finer.weights, t, sqrt_w);
            worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-300));
        }
        current = std::move(finer);
        if (worst <= kRefineTol) break;
    }
    nodes_ = std::move(current.nodes);
    weights_ = std::move(current.weights);
}

double ThetaTail::operator()(double t) const {
    if (t < 0.0 || std::isnan(t)) throw std::domain_error("theta_tail: t must be nonnegative");
    if (t == 0.0) return 1.0;
    return std::min(1.0, apply_rule(nodes_, weights_, t, std::sqrt(static_cast<double>(w_))));
}

std::shared_ptr<const ThetaTail> theta_tail_table(Index w) {
    static std::mutex mutex;
    static std::map<Index, std::shared_ptr<const ThetaTail>> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(w);
    if (it == cache.end()) it = cache.emplace(w, std::make_shared<const ThetaTail>(w)).first;
    return it->second;
}

double theta_tail(Index w, double t) { return (*theta_tail_table(w))(t); }

std::string to_string(ThresholdMethod method) {
    switch (method) {
        case ThresholdMethod::exact: return "exact";
        case ThresholdMethod::asymptotic: return "asymptotic";
        case ThresholdMethod::union_bound: return "union";
    }
    return "exact";
}

ThresholdMethod parse_threshold_method(const std::string& text) {
    if (text == "exact") return ThresholdMethod::exact;
    if (text == "asymptotic") return ThresholdMethod::asymptotic;
    if (text == "union") return ThresholdMethod::union_bound;
    throw InvalidConfig("unknown threshold method '" + text + "'");
}

double exact_tail_target(double pi0, Index p) {
    const double pairs = 0.5 * static_cast<double>(p) * static_cast<double>(p + 1);
    return -std::log1p(-pi0) / pairs;
}

double critical_value_exact(double pi0, Index p, Index w) {
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw InvalidConfig("critical_value_exact: pi0 must lie in (0, 1)");
    if (p < 2 || w < 2) throw InvalidConfig("critical_value_exact: need p >= 2 and w >= 2");
    const double target = exact_tail_target(pi0, p);
    if (target >= 1.0) throw TargetOutOfRange("critical_value_exact: tail target >= 1");

    const auto tail = theta_tail_table(w);
    double lo = 0.0;
    double hi = 20.0;
    while ((*tail)(hi) > target) {
        std::cerr << "warning: critical_value_exact bracket [0, " << hi << "] too narrow; widening\n";
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw NoConvergence("critical_value_exact: cannot bracket the root");
    }
    // Bisect down to adjacent doubles.
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if ((*tail)(mid) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double err_lo = std::abs((*tail)(lo) - target);
    const double err_hi = std::abs((*tail)(hi) - target);
    return err_lo < err_hi ? lo : hi;
}

namespace {

double closed_form_zeta(double log_term, Index p) {
    const double pairs = 0.5 * static_cast<double>(p) * static_cast<double>(p + 1);
    const double log_c = std::log(pairs);
    if (!(log_c > 0.0)) throw NegativeZetaSquared("critical value: log log binom(p+1,2) undefined for p < 2");
    const double zeta_sq = 2.0 * log_c - std::log(log_c) - 2.0 * log_term;
    if (!(zeta_sq > 0.0)) throw NegativeZetaSquared("critical value: zeta^2 <= 0 for these parameters");
    return std::sqrt(zeta_sq);
}

}  // namespace

double critical_value_asymptotic(double pi0, Index p) {
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw InvalidConfig("critical_value_asymptotic: pi0 must lie in (0, 1)");
    return closed_form_zeta(std::log(std::sqrt(std::numbers::pi) * -std::log1p(-pi0)), p);
}

double critical_value_union(double pi0, Index p) {
    if (!(pi0 > 0.0 && pi0 < 0.5)) throw InvalidConfig("critical_value_union: pi0 must lie in (0, 1/2)");
    return closed_form_zeta(std::log(2.0 * std::sqrt(std::numbers::pi) * -std::log1p(-0.5 * pi0)), p);
}

ThresholdSpec resolve(ThresholdSpec spec) {
    switch (spec.method) {
        case ThresholdMethod::exact: spec.zeta = critical_value_exact(spec.pi0, spec.p, spec.w); break;
        case ThresholdMethod::asymptotic: spec.zeta = critical_value_asymptotic(spec.pi0, spec.p); break;
        case ThresholdMethod::union_bound: spec.zeta = critical_value_union(spec.pi0, spec.p); break;
    }
    return spec;
}

}  // namespace lcpd
