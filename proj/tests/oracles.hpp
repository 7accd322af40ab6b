// Reference values computed independently of the library code paths.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

// int_0^inf x^s e^{-c x} e^{i a x} dx = Gamma(s+1) / (c - i a)^(s+1)
inline cplx laplace_power(double s, double c, double a) {
    return std::tgamma(s + 1.0) * std::pow(cplx(c, -a), -(s + 1.0));
}

// nu(t) at zero temperature
inline double nu_zero_temperature(double eta, double wc, double s, double t) {
    return eta * wc * wc * laplace_power(s, 1.0, wc * t).real();
}

// mu(t) = -eta wc^2 Im[...]
inline double mu(double eta, double wc, double s, double t) {
    return -eta * wc * wc * laplace_power(s, 1.0, wc * t).imag();
}

// nu(t) at finite beta from coth(u) = 1 + 2 sum_n exp(-2 n u), summed to n_terms with an
// integral estimate of the tail.
inline double nu_finite_temperature(double eta, double wc, double s, double beta, double t,
                                    long n_terms = 2000000) {
    const double b = 0.5 * beta * wc;
    const double a = wc * t;
    double sum = laplace_power(s, 1.0, a).real();
    double partial = 0.0;
    for (long n = n_terms; n >= 1; --n) partial += laplace_power(s, 1.0 + 2.0 * b * n, a).real();
    sum += 2.0 * partial;
    const double edge = 1.0 + 2.0 * b * (static_cast<double>(n_terms) + 0.5);
    const cplx tail = std::tgamma(s + 1.0) / (2.0 * b * s) * std::pow(cplx(edge, -a), -s);
    sum += 2.0 * tail.real();
    return eta * wc * wc * sum;
}

// Gamma(t) at zero temperature: 2 eta ln(1 + (wc t)^2) for s = 1, otherwise
// 4 eta Gamma(s-1) [1 - cos((s-1) atan(wc t)) (1 + (wc t)^2)^(-(s-1)/2)] for s > 1.
inline double decoherence_zero_temperature(double eta, double wc, double s, double t) {
    const double a = wc * t;
    if (s == 1.0) return 2.0 * eta * std::log1p(a * a);
    return 4.0 * eta * std::tgamma(s - 1.0) *
           (1.0 - std::cos((s - 1.0) * std::atan(a)) * std::pow(1.0 + a * a, -(s - 1.0) / 2.0));
}

// Direct summation in long double, outer loop over samples.
inline std::vector<std::complex<long double>> nudft_long(const std::vector<double>& x, const std::vector<double>& p) {
    const std::size_t m = x.size();
    std::vector<std::complex<long double>> out(m);
    const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
    for (std::size_t n = 0; n < m; ++n)
        for (std::size_t k = 0; k < m; ++k) {
            const long double ph = -two_pi * static_cast<long double>(k) * static_cast<long double>(p[n]);
            out[k] += static_cast<long double>(x[n]) * std::complex<long double>(std::cos(ph), std::sin(ph));
        }
    return out;
}

} // namespace oracle
