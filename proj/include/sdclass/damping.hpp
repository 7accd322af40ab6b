// damping.hpp: second-order time-convolutionless amplitude-damping dynamics
//
//   d<s>/dt = A(t) <s> + (0, 0, b_z(t))
//
//          | 0              -w0      0      |
//   A(t) = | w0 + a_yx(t)   a_zz(t)  0      |
//          | 0              0        a_zz(t)|
//
//   a_yx(t) =  int_0^t nu(u) sin(w0 u) du
//   a_zz(t) = -int_0^t nu(u) cos(w0 u) du
//   b_z(t)  =  int_0^t mu(u) sin(w0 u) du
//
// The y-y entry is a_zz, as in the matrix form of the equations (some write it a_yy).

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdclass/dephasing.hpp"
#include "sdclass/kernels.hpp"
#include "sdclass/spectral_density.hpp"
#include "sdclass/time_grid.hpp"

namespace sdclass {

struct CoefficientTable {
    UniformGrid grid; // starts at 0
    std::vector<double> a_yx;
    std::vector<double> a_zz;
    std::vector<double> b_z;

    std::size_t size() const noexcept { return grid.n; }
};

// Cumulative trapezoid integrals of the tabulated kernels against sin/cos(w0 t).
inline CoefficientTable coefficient_table(const KernelGrid& kernels, const UniformGrid& grid, double omega0) {
    if (grid.n < 2 || grid.t0 != 0.0) throw std::invalid_argument("coefficient_table: grid must start at 0 with n >= 2");
    if (kernels.nu.size() != grid.n || kernels.mu.size() != grid.n)
        throw std::invalid_argument("coefficient_table: kernel grid does not match the time grid");
    CoefficientTable c;
    c.grid = grid;
    c.a_yx.assign(grid.n, 0.0);
    c.a_zz.assign(grid.n, 0.0);
    c.b_z.assign(grid.n, 0.0);
    const double h = 0.5 * grid.dt;
    double prev_sin = 0.0, prev_cos = 1.0;
    for (std::size_t i = 1; i < grid.n; ++i) {
        const double t = grid.at(i);
        const double sn = std::sin(omega0 * t), cs = std::cos(omega0 * t);
        c.a_yx[i] = c.a_yx[i - 1] + h * (kernels.nu[i - 1] * prev_sin + kernels.nu[i] * sn);
        c.a_zz[i] = c.a_zz[i - 1] - h * (kernels.nu[i - 1] * prev_cos + kernels.nu[i] * cs);
        c.b_z[i] = c.b_z[i - 1] + h * (kernels.mu[i - 1] * prev_sin + kernels.mu[i] * sn);
        prev_sin = sn;
        prev_cos = cs;
    }
    return c;
}

inline CoefficientTable coefficient_table(const SpectralDensity& sd, const InverseTemperature& beta, double omega0,
                                          const UniformGrid& fine_grid, const QuadratureOptions& opt = {}) {
    return coefficient_table(tabulate_kernels(sd, beta, fine_grid, opt), fine_grid, omega0);
}

struct BlochSeries {
    std::vector<double> times;
    std::vector<Eigen::Vector3d> values;
};

// Classical RK4 with step h = 2 * stride * table step; every stage reads the table exactly.
inline BlochSeries integrate_bloch(const CoefficientTable& table, double omega0, const Eigen::Vector3d& bloch0,
                                   std::size_t stride = 1) {
    if (stride < 1) throw std::invalid_argument("integrate_bloch: stride must be positive");
    if (table.size() < 3 || (table.size() - 1) % (2 * stride) != 0)
        throw std::invalid_argument("integrate_bloch: table length incompatible with stride " + std::to_string(stride));
    const std::size_t steps = (table.size() - 1) / (2 * stride);
    const double h = 2.0 * static_cast<double>(stride) * table.grid.dt;

    auto rhs = [&](std::size_t k, const Eigen::Vector3d& v) {
        const double ayx = table.a_yx[k], azz = table.a_zz[k];
        return Eigen::Vector3d(-omega0 * v.y(), (omega0 + ayx) * v.x() + azz * v.y(), azz * v.z() + table.b_z[k]);
    };

    BlochSeries out;
    out.times.reserve(steps + 1);
    out.values.reserve(steps + 1);
    Eigen::Vector3d v = bloch0;
    out.times.push_back(0.0);
    out.values.push_back(v);
    for (std::size_t n = 0; n < steps; ++n) {
        const std::size_t k0 = 2 * stride * n;
        const Eigen::Vector3d k1 = rhs(k0, v);
        const Eigen::Vector3d k2 = rhs(k0 + stride, v + 0.5 * h * k1);
        const Eigen::Vector3d k3 = rhs(k0 + stride, v + 0.5 * h * k2);
        const Eigen::Vector3d k4 = rhs(k0 + 2 * stride, v + h * k3);
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.times.push_back(table.grid.at(k0 + 2 * stride));
        out.values.push_back(v);
    }
    return out;
}

struct DampingConfig {
    SpectralDensity sd{0.1, 1.0, 1.0};
    InverseTemperature beta{InverseTemperature::finite(0.1)};
    double omega0{1.0};
    Eigen::Vector3d bloch0{1.0, 0.0, 0.0}; // |+><+|
    double t_min{0.0};
    double t_max{10.0};
    std::size_t n_points{400};
    std::size_t ode_steps{4000}; // on [0, t_max]; the coefficient grid has 2 * ode_steps + 1 points

    void validate() const {
        sd.validate(true);
        if (!std::isfinite(omega0)) throw std::invalid_argument("DampingConfig: omega0 must be finite");
        if (bloch0.norm() > 1.0 + 1e-12) throw std::invalid_argument("DampingConfig: |bloch0| must not exceed 1");
        if (!(t_min >= 0.0 && t_min < t_max)) throw std::invalid_argument("DampingConfig: need 0 <= t_min < t_max");
        if (n_points < 2) throw std::invalid_argument("DampingConfig: n_points must be at least 2");
        if (ode_steps < 1) throw std::invalid_argument("DampingConfig: ode_steps must be positive");
    }

    UniformGrid fine_grid() const { return UniformGrid::closed(0.0, t_max, 2 * ode_steps + 1); }
    UniformGrid sample_grid() const { return UniformGrid::half_open(t_min, t_max, n_points); }
};

inline BlochSeries evolve_bloch(const DampingConfig& cfg, const CoefficientTable& table) {
    cfg.validate();
    const auto fine = cfg.fine_grid();
    if (table.size() != fine.n || std::abs(table.grid.dt - fine.dt) > 1e-12 * fine.dt)
        throw std::invalid_argument("evolve_bloch: coefficient table does not span [0, " + std::to_string(cfg.t_max) +
                                    "] at half-step resolution");
    return integrate_bloch(table, cfg.omega0, cfg.bloch0);
}

inline BlochSeries evolve_bloch(const DampingConfig& cfg, const QuadratureOptions& opt = {}) {
    cfg.validate();
    const auto fine = cfg.fine_grid();
    return evolve_bloch(cfg, coefficient_table(cfg.sd, cfg.beta, cfg.omega0, fine, opt));
}

// Picks the <sigma_x> samples on [t_min, t_max) out of the ODE series.
inline Trajectory sample_sigma_x(const DampingConfig& cfg, const BlochSeries& series) {
    const auto grid = cfg.sample_grid();
    const double h = series.times.size() > 1 ? series.times[1] - series.times[0] : 0.0;
    Trajectory tr;
    tr.times = grid.times();
    tr.values.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double pos = tr.times[i] / h;
        const auto k = static_cast<std::size_t>(std::llround(pos));
        if (std::abs(pos - static_cast<double>(k)) > 1e-6 || k >= series.values.size())
            throw std::invalid_argument("sigma_x_trajectory_damping: sample time " + std::to_string(tr.times[i]) +
                                        " is not on the ODE grid");
        tr.values[i] = series.values[k].x();
    }
    return tr;
}

inline Trajectory sigma_x_trajectory_damping(const DampingConfig& cfg, const QuadratureOptions& opt = {}) {
    return sample_sigma_x(cfg, evolve_bloch(cfg, opt));
}

} // namespace sdclass
