// fourier.hpp: direct (non-)uniform discrete Fourier transforms and feature layout

#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdclass {

using Complex = std::complex<double>;

inline std::vector<Complex> nudft_on_grid(std::span<const double> samples, std::span<const std::size_t> indices,
                                          std::size_t n_full);

// X_k = sum_n x_n exp(-2 pi i k p_n), k = 0 .. M-1, by direct summation.
// Positions lying on the M-point grid j / M (to rounding) are evaluated with exact integer
// phases; otherwise k * p_n is reduced mod 1 with a compensated product.
inline std::vector<Complex> nudft(std::span<const double> samples, std::span<const double> positions) {
    if (samples.size() != positions.size())
        throw std::invalid_argument("nudft: " + std::to_string(samples.size()) + " samples but " +
                                    std::to_string(positions.size()) + " positions");
    for (std::size_t n = 0; n < positions.size(); ++n) {
        if (!(positions[n] >= 0.0 && positions[n] < 1.0))
            throw std::domain_error("nudft: position " + std::to_string(n) + " outside [0, 1)");
        if (n > 0 && !(positions[n] > positions[n - 1]))
            throw std::domain_error("nudft: positions must be strictly increasing");
    }
    const std::size_t m = samples.size();
    std::vector<std::size_t> on_grid(m);
    bool snapped = true;
    for (std::size_t n = 0; n < m && snapped; ++n) {
        const double scaled = positions[n] * static_cast<double>(m);
        const double r = std::round(scaled);
        snapped = std::abs(scaled - r) <= 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(m);
        on_grid[n] = static_cast<std::size_t>(r);
    }
    if (snapped && m > 0) return nudft_on_grid(samples, on_grid, m);

    std::vector<Complex> out(m);
    for (std::size_t k = 0; k < m; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t n = 0; n < m; ++n) {
            const double prod = static_cast<double>(k) * positions[n];
            const double frac = (prod - std::floor(prod)) + std::fma(static_cast<double>(k), positions[n], -prod);
            const double phase = -2.0 * std::numbers::pi * frac;
            re += samples[n] * std::cos(phase);
            im += samples[n] * std::sin(phase);
        }
        out[k] = {re, im};
    }
    return out;
}

// Non-uniform transform for samples taken at grid indices n_j of a half-open grid of size N,
// i.e. p_j = n_j / N. Phases k n_j mod N are reduced in integer arithmetic.
inline std::vector<Complex> nudft_on_grid(std::span<const double> samples, std::span<const std::size_t> indices,
                                          std::size_t n_full) {
    if (samples.size() != indices.size())
        throw std::invalid_argument("nudft_on_grid: " + std::to_string(samples.size()) + " samples but " +
                                    std::to_string(indices.size()) + " indices");
    if (n_full == 0) throw std::invalid_argument("nudft_on_grid: empty grid");
    for (std::size_t j = 0; j < indices.size(); ++j) {
        if (indices[j] >= n_full) throw std::domain_error("nudft_on_grid: index out of range");
        if (j > 0 && !(indices[j] > indices[j - 1]))
            throw std::domain_error("nudft_on_grid: indices must be strictly increasing");
    }
    for (std::size_t j = 0; j < samples.size(); ++j)
        if (!std::isfinite(samples[j])) throw std::domain_error("nudft: non-finite sample " + std::to_string(j));
    std::vector<double> cos_table(n_full), sin_table(n_full);
    for (std::size_t j = 0; j < n_full; ++j) {
        const double phase = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_full);
        cos_table[j] = std::cos(phase);
        sin_table[j] = std::sin(phase);
    }
    const std::size_t m = samples.size();
    std::vector<Complex> out(m);
    for (std::size_t k = 0; k < m; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t idx = (k * indices[j]) % n_full;
            re += samples[j] * cos_table[idx];
            im += samples[j] * sin_table[idx];
        }
        out[k] = {re, im};
    }
    return out;
}

// X_k = sum_n x_n exp(-2 pi i k n / N)
inline std::vector<Complex> dft(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("dft: empty input");
    std::vector<std::size_t> all(samples.size());
    for (std::size_t n = 0; n < all.size(); ++n) all[n] = n;
    return nudft_on_grid(samples, all, samples.size());
}

// x_n = (1/N) sum_k X_k exp(+2 pi i k n / N)
inline std::vector<Complex> inverse_dft(std::span<const Complex> coeffs) {
    const std::size_t n_total = coeffs.size();
    if (n_total == 0) throw std::invalid_argument("inverse_dft: empty input");
    std::vector<Complex> out(n_total);
    for (std::size_t n = 0; n < n_total; ++n) {
        Complex acc{0.0, 0.0};
        for (std::size_t k = 0; k < n_total; ++k) {
            const std::size_t idx = (k * n) % n_total;
            acc += coeffs[k] * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(idx) / n_total);
        }
        out[n] = acc / static_cast<double>(n_total);
    }
    return out;
}

// [Re X_0 .. Re X_{M-1} | Im X_0 .. Im X_{M-1}]
struct FeatureVector {
    std::vector<double> values;
};

inline FeatureVector to_features(std::span<const Complex> coeffs) {
    FeatureVector f;
    f.values.resize(2 * coeffs.size());
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        f.values[k] = coeffs[k].real();
        f.values[coeffs.size() + k] = coeffs[k].imag();
    }
    return f;
}

// p = (t - t_min) / (t_max - t_min); the half-open grid point n maps to n / N.
inline std::vector<double> position_scaling(std::span<const double> times, double t_min, double t_max) {
    if (!(t_min < t_max)) throw std::invalid_argument("position_scaling: t_min must be below t_max");
    std::vector<double> p(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= t_min && times[i] < t_max))
            throw std::domain_error("position_scaling: time " + std::to_string(times[i]) + " outside [t_min, t_max)");
        p[i] = (times[i] - t_min) / (t_max - t_min);
    }
    return p;
}

// Exact positions n / N for a subset of a half-open uniform grid.
inline std::vector<double> grid_positions(std::span<const std::size_t> indices, std::size_t n_full) {
    std::vector<double> p(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= n_full) throw std::domain_error("grid_positions: index out of range");
        p[i] = static_cast<double>(indices[i]) / static_cast<double>(n_full);
    }
    return p;
}

} // namespace sdclass
