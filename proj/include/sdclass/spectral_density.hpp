// spectral_density.hpp: power-law spectral densities with exponential cutoff

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sdclass {

enum class CutoffKind { Exponential };

// J(w) = eta * wc^(1-s) * w^s * f(w, wc), f = exp(-w/wc)
struct SpectralDensity {
    double eta{0.25};
    double omega_c{0.5};
    double s{1.0};
    CutoffKind cutoff{CutoffKind::Exponential};

    // Null coupling is only meaningful to the dynamics, where it switches the bath off.
    void validate(bool allow_null_coupling = false) const {
        const bool eta_ok = allow_null_coupling ? eta >= 0.0 : eta > 0.0;
        if (!eta_ok || !std::isfinite(eta))
            throw std::invalid_argument("SpectralDensity: eta must be positive and finite");
        if (!(omega_c > 0.0) || !std::isfinite(omega_c))
            throw std::invalid_argument("SpectralDensity: omega_c must be positive and finite");
        if (!(s > 0.0) || !std::isfinite(s))
            throw std::invalid_argument("SpectralDensity: s must be positive and finite");
    }

    // J in the dimensionless variable x = w / wc, divided by (eta * wc).
    double reduced(double x) const noexcept { return std::pow(x, s) * std::exp(-x); }

    friend bool operator==(const SpectralDensity&, const SpectralDensity&) = default;
};

inline double evaluate_sd(const SpectralDensity& sd, double omega) {
    if (!(omega >= 0.0))
        throw std::domain_error("evaluate_sd: omega must be nonnegative, got " + std::to_string(omega));
    if (omega == 0.0) return 0.0;
    return sd.eta * sd.omega_c * sd.reduced(omega / sd.omega_c);
}

// beta = 1/T. Zero temperature is represented explicitly rather than by a huge beta.
class InverseTemperature {
public:
    static InverseTemperature infinite() noexcept { return InverseTemperature{}; }

    static InverseTemperature finite(double beta) {
        if (!(beta > 0.0) || !std::isfinite(beta))
            throw std::invalid_argument("InverseTemperature: beta must be positive and finite");
        InverseTemperature b;
        b.beta_ = beta;
        return b;
    }

    // Accepts +inf as the zero-temperature value.
    static InverseTemperature from_value(double beta) {
        if (std::isinf(beta) && beta > 0.0) return infinite();
        return finite(beta);
    }

    bool is_infinite() const noexcept { return std::isinf(beta_); }
    double value() const noexcept { return beta_; }

    friend bool operator==(const InverseTemperature&, const InverseTemperature&) = default;

private:
    InverseTemperature() = default;
    double beta_{std::numeric_limits<double>::infinity()};
};

// coth(u) for u > 0, switching to the Laurent series where direct evaluation cancels.
inline double coth(double u) noexcept {
    if (u < 1e-4) {
        const double u2 = u * u;
        return 1.0 / u + u / 3.0 - u * u2 / 45.0;
    }
    if (u > 20.0) return 1.0;  // 1 + 2e^{-2u}, below double resolution past ~18.4
    return 1.0 / std::tanh(u);
}

// coth(beta * w / 2), equal to 1 at zero temperature.
inline double thermal_factor(const InverseTemperature& beta, double omega) noexcept {
    if (beta.is_infinite()) return 1.0;
    return coth(0.5 * beta.value() * omega);
}

} // namespace sdclass
