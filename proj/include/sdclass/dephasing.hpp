// dephasing.hpp: exactly solvable pure-dephasing spin-boson model
//
// Populations stay fixed; coherences decay as exp(-Gamma(t)) with
//   Gamma(t) = 4 int_0^inf J(w) coth(beta w / 2) (1 - cos w t) / w^2 dw.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "sdclass/kernels.hpp"
#include "sdclass/quadrature.hpp"
#include "sdclass/spectral_density.hpp"
#include "sdclass/time_grid.hpp"

namespace sdclass {

struct Trajectory {
    std::vector<double> times;
    std::vector<double> values;
};

namespace detail {

struct DecoherenceRule {
    Eigen::ArrayXd freq;
    Eigen::ArrayXd coeff;
    Eigen::Index direct_count{0}; // leading nodes evaluated with 2 sin^2(w t / 2)
    double oscillating_total{0.0};  // sum of coeff over the remaining nodes
};

inline DecoherenceRule decoherence_rule(const SpectralDensity& sd, const InverseTemperature& beta,
                                        double t_max, QuadratureOptions opt) {
    sd.validate(true);
    if (sd.eta == 0.0) return {};
    const ReducedKernel k(KernelPart::Decoherence, sd, beta);
    std::vector<KernelProbe> probes;
    for (double t : {0.25 * t_max, 0.5 * t_max, t_max}) probes.push_back({&k, sd.omega_c * t});
    const double scale = 4.0 * sd.eta;
    opt.abs_tol /= scale;
    const NodeSet ns = build_nodes(std::span<const KernelProbe>(probes), k.endpoint_power(), sd.omega_c * t_max, opt);

    DecoherenceRule r;
    const auto m = static_cast<Eigen::Index>(ns.size());
    r.freq.resize(m);
    r.coeff.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        r.freq[j] = sd.omega_c * ns.x[j];
        r.coeff[j] = scale * ns.weight[j] * k.envelope(ns.x[j]);
    }
    // Near w = 0 the weights blow up like x^(s-2) (x^(s-3) at finite beta), so 1 - cos is
    // never formed there.
    const double x_direct = beta.is_infinite() ? opt.x_split : 10.0 * opt.x_split;
    r.direct_count = static_cast<Eigen::Index>(ns.graded_count);
    while (r.direct_count < m && ns.x[r.direct_count] < x_direct) ++r.direct_count;
    r.oscillating_total = r.coeff.tail(m - r.direct_count).sum();
    return r;
}

inline double direct_part(const DecoherenceRule& r, double t) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < r.direct_count; ++j) {
        const double h = std::sin(0.5 * r.freq[j] * t);
        acc += r.coeff[j] * 2.0 * h * h;
    }
    return acc;
}

} // namespace detail

// Gamma(t_i) on arbitrary nonnegative times.
inline std::vector<double> decoherence_table(const SpectralDensity& sd, const InverseTemperature& beta,
                                             std::span<const double> times, const QuadratureOptions& opt = {}) {
    double t_max = 0.0;
    for (double t : times) {
        if (!(t >= 0.0) || !std::isfinite(t))
            throw std::domain_error("decoherence_function: t must be finite and nonnegative");
        t_max = std::max(t_max, t);
    }
    std::vector<double> out(times.size(), 0.0);
    if (t_max == 0.0) return out;
    const auto r = detail::decoherence_rule(sd, beta, t_max, opt);
    const Eigen::Index m = r.freq.size();
    for (std::size_t i = 0; i < times.size(); ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double h = std::sin(0.5 * r.freq[j] * times[i]);
            acc += r.coeff[j] * 2.0 * h * h;
        }
        out[i] = acc;
    }
    return out;
}

// Gamma on a uniform grid; the bulk of the nodes use the rotation recurrence.
inline std::vector<double> decoherence_table(const SpectralDensity& sd, const InverseTemperature& beta,
                                             const UniformGrid& grid, const QuadratureOptions& opt = {}) {
    if (grid.n == 0) return {};
    if (!(grid.t0 >= 0.0) || !(grid.dt > 0.0))
        throw std::domain_error("decoherence_table: grid must start at t >= 0 with positive step");
    std::vector<double> out(grid.n, 0.0);
    const double t_max = grid.back();
    if (t_max == 0.0) return out;
    const auto r = detail::decoherence_rule(sd, beta, t_max, opt);
    const Eigen::Index tail = r.freq.size() - r.direct_count;
    const Eigen::ArrayXd f = r.freq.tail(tail);
    const Eigen::ArrayXd c = r.coeff.tail(tail);
    const Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(tail);
    std::vector<double> cos_sum(grid.n), unused(grid.n);
    trig_sums(f, c, zero, grid, cos_sum, unused);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double t = grid.at(i);
        out[i] = t == 0.0 ? 0.0 : detail::direct_part(r, t) + (r.oscillating_total - cos_sum[i]);
    }
    return out;
}

inline double decoherence_function(const SpectralDensity& sd, const InverseTemperature& beta, double t,
                                   const QuadratureOptions& opt = {}) {
    const std::array<double, 1> ts{t};
    return decoherence_table(sd, beta, ts, opt)[0];
}

struct DephasingConfig {
    SpectralDensity sd{};
    InverseTemperature beta{InverseTemperature::infinite()};
    Eigen::Matrix2cd rho0{Eigen::Matrix2cd::Constant(0.5)}; // |+><+|
    double t_min{0.0};
    double t_max{10.0};
    std::size_t n_points{400};

    void validate() const {
        sd.validate();
        if (!(t_min < t_max)) throw std::invalid_argument("DephasingConfig: t_min must be below t_max");
        if (t_min < 0.0) throw std::invalid_argument("DephasingConfig: t_min must be nonnegative");
        if (n_points < 2) throw std::invalid_argument("DephasingConfig: n_points must be at least 2");
        if (!rho0.isApprox(rho0.adjoint(), 1e-12))
            throw std::invalid_argument("DephasingConfig: rho0 must be Hermitian");
        if (std::abs(rho0.trace() - 1.0) > 1e-12) throw std::invalid_argument("DephasingConfig: rho0 must have unit trace");
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho0, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-12)
            throw std::invalid_argument("DephasingConfig: rho0 must be positive semidefinite");
    }

    UniformGrid grid() const { return UniformGrid::half_open(t_min, t_max, n_points); }
};

inline Eigen::Matrix2cd apply_dephasing(const Eigen::Matrix2cd& rho0, double gamma) {
    Eigen::Matrix2cd rho = rho0;
    const double damp = std::exp(-gamma);
    rho(0, 1) = rho0(0, 1) * damp;
    rho(1, 0) = std::conj(rho(0, 1));
    rho(1, 1) = 1.0 - rho0(0, 0).real();
    rho(0, 0) = rho0(0, 0).real();
    return rho;
}

inline Eigen::Matrix2cd evolve_density(const DephasingConfig& cfg, double t, const QuadratureOptions& opt = {}) {
    cfg.validate();
    if (!(t >= cfg.t_min && t <= cfg.t_max))
        throw std::domain_error("evolve_density: t outside [t_min, t_max]");
    return apply_dephasing(cfg.rho0, decoherence_function(cfg.sd, cfg.beta, t, opt));
}

// Gamma tables keyed by (sd, beta, grid). Safe for concurrent readers and writers.
class DecoherenceCache {
public:
    std::shared_ptr<const std::vector<double>> get(const SpectralDensity& sd, const InverseTemperature& beta,
                                                   const UniformGrid& grid, const QuadratureOptions& opt = {}) {
        const Key key{sd.eta, sd.omega_c, sd.s, beta.value(), grid.t0, grid.dt, grid.n};
        {
            std::lock_guard lock(mutex_);
            if (auto it = table_.find(key); it != table_.end()) return it->second;
        }
        auto value = std::make_shared<const std::vector<double>>(decoherence_table(sd, beta, grid, opt));
        std::lock_guard lock(mutex_);
        return table_.emplace(key, std::move(value)).first->second;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return table_.size();
    }

private:
    using Key = std::tuple<double, double, double, double, double, double, std::size_t>;
    mutable std::mutex mutex_;
    std::map<Key, std::shared_ptr<const std::vector<double>>> table_;
};

// <sigma_x(t)> = 2 Re(rho01 exp(-Gamma(t))) on the config's half-open grid.
inline Trajectory sigma_x_trajectory(const DephasingConfig& cfg, DecoherenceCache* cache = nullptr,
                                     const QuadratureOptions& opt = {}) {
    cfg.validate();
    const auto grid = cfg.grid();
    std::shared_ptr<const std::vector<double>> gamma;
    if (cache)
        gamma = cache->get(cfg.sd, cfg.beta, grid, opt);
    else
        gamma = std::make_shared<const std::vector<double>>(decoherence_table(cfg.sd, cfg.beta, grid, opt));
    Trajectory tr;
    tr.times = grid.times();
    tr.values.resize(grid.n);
    const double coherence = 2.0 * cfg.rho0(0, 1).real();
    for (std::size_t i = 0; i < grid.n; ++i) tr.values[i] = coherence * std::exp(-(*gamma)[i]);
    return tr;
}

} // namespace sdclass
