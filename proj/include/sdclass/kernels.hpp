// kernels.hpp: noise and dissipation kernels of a thermal bosonic bath
//
//   nu(t) =  int_0^inf J(w) coth(beta w / 2) cos(w t) dw
//   mu(t) = -int_0^inf J(w) sin(w t) dw
//
// Integrals run over x = w / wc on [0, 50] with composite 16-point Gauss-Legendre panels.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sdclass/quadrature.hpp"
#include "sdclass/spectral_density.hpp"
#include "sdclass/time_grid.hpp"

namespace sdclass {

struct KernelGrid {
    std::vector<double> times;
    std::vector<double> nu;
    std::vector<double> mu;
};

namespace detail {

enum class KernelPart { Noise, Dissipation, Decoherence };

// Integrand in x with the prefactors (eta wc^2 for nu/mu, 4 eta for Gamma) removed.
struct ReducedKernel {
    KernelPart part;
    double s;
    double b; // beta * wc / 2; +inf at zero temperature

    ReducedKernel(KernelPart p, const SpectralDensity& sd, const InverseTemperature& beta)
        : part(p), s(sd.s), b(beta.is_infinite() ? INFINITY : 0.5 * beta.value() * sd.omega_c) {}

    bool zero_temperature() const noexcept { return std::isinf(b); }

    double thermal(double x) const noexcept { return zero_temperature() ? 1.0 : coth(b * x); }

    double endpoint_power() const noexcept {
        switch (part) {
            case KernelPart::Dissipation: return s + 1.0;
            case KernelPart::Noise:
            case KernelPart::Decoherence: return zero_temperature() ? s : s - 1.0;
        }
        return s;
    }

    // t-independent factor of the integrand
    double envelope(double x) const noexcept {
        const double lx = std::log(x);
        switch (part) {
            case KernelPart::Noise: return std::exp(s * lx - x) * thermal(x);
            case KernelPart::Dissipation: return std::exp(s * lx - x);
            case KernelPart::Decoherence: return std::exp((s - 2.0) * lx - x) * thermal(x);
        }
        return 0.0;
    }

    // full integrand at oscillation rate a = wc * t
    double operator()(double x, double a) const noexcept {
        switch (part) {
            case KernelPart::Noise: return envelope(x) * std::cos(a * x);
            case KernelPart::Dissipation: return envelope(x) * std::sin(a * x);
            case KernelPart::Decoherence: {
                const double h = std::sin(0.5 * a * x);
                return envelope(x) * 2.0 * h * h;
            }
        }
        return 0.0;
    }
};

struct KernelProbe {
    const ReducedKernel* kernel;
    double a;
    double operator()(double x) const noexcept { return (*kernel)(x, a); }
};

inline std::vector<double> probe_times(double t_abs_max) {
    return {0.0, 0.25 * t_abs_max, 0.5 * t_abs_max, t_abs_max};
}

// Node set and per-node coefficients shared by nu and mu.
struct KernelRule {
    Eigen::ArrayXd freq; // w_j = wc x_j
    Eigen::ArrayXd c_nu;
    Eigen::ArrayXd c_mu;
};

inline KernelRule kernel_rule(const SpectralDensity& sd, const InverseTemperature& beta, double t_abs_max,
                              QuadratureOptions opt) {
    sd.validate(true);
    if (sd.eta == 0.0) return {};
    const double scale = sd.eta * sd.omega_c * sd.omega_c;
    const ReducedKernel noise(KernelPart::Noise, sd, beta);
    const ReducedKernel diss(KernelPart::Dissipation, sd, beta);
    std::vector<KernelProbe> probes;
    for (double t : probe_times(t_abs_max)) {
        probes.push_back({&noise, sd.omega_c * t});
        if (t > 0.0) probes.push_back({&diss, sd.omega_c * t});
    }
    opt.abs_tol /= scale;
    const NodeSet ns = build_nodes(std::span<const KernelProbe>(probes), noise.endpoint_power(),
                                   sd.omega_c * t_abs_max, opt);
    KernelRule r;
    const auto m = static_cast<Eigen::Index>(ns.size());
    r.freq.resize(m);
    r.c_nu.resize(m);
    r.c_mu.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double x = ns.x[j];
        r.freq[j] = sd.omega_c * x;
        r.c_nu[j] = scale * ns.weight[j] * noise.envelope(x);
        r.c_mu[j] = -scale * ns.weight[j] * diss.envelope(x);
    }
    // pseudo-node for [0, x_floor]: weight x_floor / (p + 1) depends on the kernel's power
    r.c_mu[0] = -scale * ns.x[0] / (diss.endpoint_power() + 1.0) * diss.envelope(ns.x[0]);
    return r;
}

inline void check_ascending(std::span<const double> times) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i])) throw std::invalid_argument("kernel times must be finite");
        if (i > 0 && !(times[i] > times[i - 1]))
            throw std::invalid_argument("kernel times must be strictly increasing");
    }
}

} // namespace detail

inline KernelGrid tabulate_kernels(const SpectralDensity& sd, const InverseTemperature& beta,
                                   std::span<const double> times, const QuadratureOptions& opt = {}) {
    detail::check_ascending(times);
    KernelGrid g;
    g.times.assign(times.begin(), times.end());
    g.nu.assign(times.size(), 0.0);
    g.mu.assign(times.size(), 0.0);
    if (times.empty()) return g;
    const double t_abs = std::max(std::abs(times.front()), std::abs(times.back()));
    const auto rule = detail::kernel_rule(sd, beta, t_abs, opt);
    trig_sums(rule.freq, rule.c_nu, rule.c_mu, times, g.nu, g.mu);
    return g;
}

inline KernelGrid tabulate_kernels(const SpectralDensity& sd, const InverseTemperature& beta,
                                   const UniformGrid& grid, const QuadratureOptions& opt = {}) {
    if (!(grid.dt > 0.0)) throw std::invalid_argument("tabulate_kernels: grid step must be positive");
    KernelGrid g;
    g.times = grid.times();
    g.nu.assign(grid.n, 0.0);
    g.mu.assign(grid.n, 0.0);
    if (grid.n == 0) return g;
    const double t_abs = std::max(std::abs(grid.t0), std::abs(grid.back()));
    const auto rule = detail::kernel_rule(sd, beta, t_abs, opt);
    trig_sums(rule.freq, rule.c_nu, rule.c_mu, grid, g.nu, g.mu);
    return g;
}

inline double noise_kernel(const SpectralDensity& sd, const InverseTemperature& beta, double t,
                           const QuadratureOptions& opt = {}) {
    const std::array<double, 1> ts{t};
    return tabulate_kernels(sd, beta, ts, opt).nu[0];
}

inline double dissipation_kernel(const SpectralDensity& sd, double t, const QuadratureOptions& opt = {}) {
    const std::array<double, 1> ts{t};
    return tabulate_kernels(sd, InverseTemperature::infinite(), ts, opt).mu[0];
}

// alpha(t) = nu(t) + i mu(t)
inline std::complex<double> correlation_function(const SpectralDensity& sd, const InverseTemperature& beta,
                                                 double t, const QuadratureOptions& opt = {}) {
    const std::array<double, 1> ts{t};
    const auto g = tabulate_kernels(sd, beta, ts, opt);
    return {g.nu[0], g.mu[0]};
}

} // namespace sdclass
