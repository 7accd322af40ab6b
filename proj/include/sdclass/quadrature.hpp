// quadrature.hpp: composite Gauss-Legendre rules on [0, x_max] for integrands with
// an integrable power-law endpoint at x = 0 and oscillatory factors cos(a x), sin(a x).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdclass {

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
    double abs_tol{1e-10};
    double x_max{50.0};       // upper truncation in x = w / wc
    double x_split{0.01};     // [0, x_split] is covered by geometrically graded panels
    double graded_ratio{0.25};
    double graded_floor{1e-14}; // innermost graded panel ends at x_split * graded_floor
    int max_depth{48};
    std::size_t max_panels{1u << 20};
};

template <std::size_t N>
struct GaussLegendre {
    std::array<double, N> nodes{};
    std::array<double, N> weights{};
};

// Nodes and weights on [-1, 1] by Newton iteration on P_N.
template <std::size_t N>
const GaussLegendre<N>& gauss_legendre() {
    static const GaussLegendre<N> rule = [] {
        GaussLegendre<N> r;
        const std::size_t half = (N + 1) / 2;
        for (std::size_t i = 0; i < half; ++i) {
            double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(N) + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (std::size_t k = 2; k <= N; ++k) {
                    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                    p0 = p1;
                    p1 = pk;
                }
                dp = static_cast<double>(N) * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            r.nodes[i] = -x;
            r.weights[i] = w;
            r.nodes[N - 1 - i] = x;
            r.weights[N - 1 - i] = w;
        }
        return r;
    }();
    return rule;
}

inline constexpr std::size_t kPanelOrder = 16;

struct Panel {
    double a;
    double b;
};

template <class F>
double gl_panel(const F& f, double a, double b) {
    const auto& rule = gauss_legendre<kPanelOrder>();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < kPanelOrder; ++i) sum += rule.weights[i] * f(c + h * rule.nodes[i]);
    return h * sum;
}

// Flattened rule: sum_j weight[j] * f(x[j]) approximates the integral over [0, x_max].
// The first entry is a pseudo-node standing in for [0, x_floor], where the integrand is
// assumed to follow x^p: its weight is x_floor / (p + 1).
struct NodeSet {
    std::vector<double> x;
    std::vector<double> weight;
    std::size_t graded_count{0}; // entries [0, graded_count) lie in [0, x_split]

    std::size_t size() const noexcept { return x.size(); }
};

namespace detail {

inline std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline void append_panel(NodeSet& ns, double a, double b) {
    const auto& rule = gauss_legendre<kPanelOrder>();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t i = 0; i < kPanelOrder; ++i) {
        ns.x.push_back(c + h * rule.nodes[i]);
        ns.weight.push_back(h * rule.weights[i]);
    }
}

// Bisects [a, b] until the panel rule agrees with the sum over its halves for
// every probe integrand. Accepted panels are recorded as their two halves.
template <class Probe>
void refine(std::span<const Probe> probes, double a, double b, const QuadratureOptions& opt,
            std::vector<Panel>& out) {
    struct Item {
        double a, b;
        int depth;
    };
    const double span_total = opt.x_max - opt.x_split;
    std::vector<Item> stack{{a, b, 0}};
    while (!stack.empty()) {
        const Item it = stack.back();
        stack.pop_back();
        const double m = 0.5 * (it.a + it.b);
        const double local_tol = opt.abs_tol * (it.b - it.a) / span_total;
        // err is the worst excess over tolerance; steep integrands hit the rounding floor
        // of the panel sums before local_tol, so that floor counts as converged
        double err = 0.0, excess = 0.0;
        for (const auto& f : probes) {
            const double whole = gl_panel(f, it.a, it.b);
            const double halves = gl_panel(f, it.a, m) + gl_panel(f, m, it.b);
            if (!std::isfinite(whole) || !std::isfinite(halves))
                throw QuadratureError("quadrature: non-finite integrand on [" + std::to_string(it.a) + ", " +
                                      std::to_string(it.b) + "]");
            const double diff = std::abs(whole - halves);
            const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(halves);
            err = std::max(err, diff);
            excess = std::max(excess, diff - std::max(local_tol, floor));
        }
        if (excess <= 0.0) {
            out.push_back({it.a, m});
            out.push_back({m, it.b});
            continue;
        }
        if (it.depth >= opt.max_depth || out.size() + stack.size() > opt.max_panels)
            throw QuadratureError("quadrature: refinement failed to reach tolerance " +
                                  fmt_g(opt.abs_tol) + " near x = " + fmt_g(m) + " depth " + std::to_string(it.depth) +
                                  " (error estimate " + fmt_g(err) + ")");
        // push right first so panels come out in ascending order
        stack.push_back({m, it.b, it.depth + 1});
        stack.push_back({it.a, m, it.depth + 1});
    }
}

} // namespace detail

// Builds a node set resolving every probe to opt.abs_tol. `endpoint_power` is the exponent p
// of the integrand's x^p behaviour at 0 (p > -1). `max_frequency` bounds the oscillation rate
// of the probes in x; it only sets the initial partition.
template <class Probe>
NodeSet build_nodes(std::span<const Probe> probes, double endpoint_power, double max_frequency,
                    const QuadratureOptions& opt = {}) {
    if (!(endpoint_power > -1.0))
        throw std::invalid_argument("build_nodes: endpoint power must exceed -1");
    NodeSet ns;
    const double x_floor = opt.x_split * opt.graded_floor;
    ns.x.push_back(x_floor);
    ns.weight.push_back(x_floor / (endpoint_power + 1.0));

    std::vector<double> edges;
    for (double e = x_floor; e < opt.x_split * (1.0 - 1e-12); e /= opt.graded_ratio) edges.push_back(e);
    edges.push_back(opt.x_split);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) detail::append_panel(ns, edges[i], edges[i + 1]);
    ns.graded_count = ns.x.size();

    double width = 1.0;
    if (max_frequency > 0.0) width = std::min(width, 4.0 * std::numbers::pi / max_frequency);
    const auto n_init = static_cast<std::size_t>(std::ceil((opt.x_max - opt.x_split) / width));
    std::vector<Panel> panels;
    for (std::size_t i = 0; i < n_init; ++i) {
        const double a = opt.x_split + (opt.x_max - opt.x_split) * static_cast<double>(i) / n_init;
        const double b = opt.x_split + (opt.x_max - opt.x_split) * static_cast<double>(i + 1) / n_init;
        detail::refine(probes, a, b, opt, panels);
    }
    for (const auto& p : panels) detail::append_panel(ns, p.a, p.b);
    return ns;
}

// Splits every Gauss-Legendre panel of `ns` in two. Used to check convergence.
inline NodeSet bisect_panels(const NodeSet& ns) {
    NodeSet out;
    out.x.push_back(ns.x[0]);
    out.weight.push_back(ns.weight[0]);
    const auto& rule = gauss_legendre<kPanelOrder>();
    for (std::size_t start = 1; start < ns.x.size(); start += kPanelOrder) {
        // recover the panel edges from its first node and weight sum
        double h = 0.0;
        for (std::size_t i = 0; i < kPanelOrder; ++i) h += ns.weight[start + i];
        h *= 0.5;
        const double c = ns.x[start] - h * rule.nodes[0];
        const double a = c - h, b = c + h;
        detail::append_panel(out, a, 0.5 * (a + b));
        detail::append_panel(out, 0.5 * (a + b), b);
        if (start + kPanelOrder == ns.graded_count) out.graded_count = out.x.size();
    }
    return out;
}

} // namespace sdclass
