// time_grid.hpp: uniform sample grids and cosine/sine sums over them

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace sdclass {

// t_i = t0 + i * dt, i = 0 .. n-1
struct UniformGrid {
    double t0{0.0};
    double dt{1.0};
    std::size_t n{0};

    // Left-closed, right-open: n points on [t_min, t_max).
    static UniformGrid half_open(double t_min, double t_max, std::size_t n) {
        if (!(t_min < t_max)) throw std::invalid_argument("UniformGrid: t_min must be below t_max");
        if (n < 1) throw std::invalid_argument("UniformGrid: need at least one point");
        return {t_min, (t_max - t_min) / static_cast<double>(n), n};
    }

    // Closed: n points on [t_min, t_max], both ends included.
    static UniformGrid closed(double t_min, double t_max, std::size_t n) {
        if (!(t_min < t_max)) throw std::invalid_argument("UniformGrid: t_min must be below t_max");
        if (n < 2) throw std::invalid_argument("UniformGrid: closed grid needs two points");
        return {t_min, (t_max - t_min) / static_cast<double>(n - 1), n};
    }

    double at(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * dt; }
    double back() const noexcept { return at(n - 1); }

    std::vector<double> times() const {
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = at(i);
        return t;
    }
};

// out_cos[n] = sum_j c_cos[j] cos(freq[j] t_n), out_sin[n] = sum_j c_sin[j] sin(freq[j] t_n).
inline void trig_sums(const Eigen::ArrayXd& freq, const Eigen::ArrayXd& c_cos, const Eigen::ArrayXd& c_sin,
                      std::span<const double> times, std::span<double> out_cos, std::span<double> out_sin) {
    Eigen::ArrayXd phase(freq.size());
    for (std::size_t n = 0; n < times.size(); ++n) {
        phase = freq * times[n];
        out_cos[n] = (c_cos * phase.cos()).sum();
        out_sin[n] = (c_sin * phase.sin()).sum();
    }
}

// Same sums on a uniform grid. Phases advance by a rotation per step and are
// recomputed exactly every `anchor` steps, keeping the drift near 1e-14.
inline void trig_sums(const Eigen::ArrayXd& freq, const Eigen::ArrayXd& c_cos, const Eigen::ArrayXd& c_sin,
                      const UniformGrid& grid, std::span<double> out_cos, std::span<double> out_sin,
                      std::size_t anchor = 64) {
    const Eigen::ArrayXd step_cos = (freq * grid.dt).cos();
    const Eigen::ArrayXd step_sin = (freq * grid.dt).sin();
    Eigen::ArrayXd re(freq.size()), im(freq.size()), tmp(freq.size());
    for (std::size_t n = 0; n < grid.n; ++n) {
        if (n % anchor == 0) {
            const Eigen::ArrayXd phase = freq * grid.at(n);
            re = phase.cos();
            im = phase.sin();
        } else {
            tmp = re * step_cos - im * step_sin;
            im = re * step_sin + im * step_cos;
            re = tmp;
        }
        out_cos[n] = (c_cos * re).sum();
        out_sin[n] = (c_sin * im).sum();
    }
}

} // namespace sdclass
