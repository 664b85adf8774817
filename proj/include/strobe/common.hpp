#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

// Shared numeric helpers and the error types thrown across the library.

namespace strobe {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// Evaluating a polarizability too close to an optical resonance.
struct PoleError : std::domain_error {
    using std::domain_error::domain_error;
};

// Argument outside the mathematical domain of a closed form.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Argument outside the validity window of a model.
struct RangeError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Time grid too coarse to resolve the strobe window.
struct GridError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed scenario or parameter configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Degenerate sample statistics (e.g. zero variance in a conditioning variable).
struct DegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double hz_to_rad(double f_hz) { return two_pi * f_hz; }
inline double rad_to_hz(double w) { return w / two_pi; }

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

namespace detail {

// 1 - sin(x)/x, accurate for all x >= 0.  The direct expression cancels
// catastrophically below x ~ 1e-4; the series converges to full double
// precision for |x| < 0.5.
inline double one_minus_sinc(double x) {
    const double x2 = x * x;
    if (std::abs(x) < 0.5) {
        // x^2/3! - x^4/5! + x^6/7! - x^8/9! + x^10/11! - x^12/13!
        return x2 * (1.0 / 6.0 +
               x2 * (-1.0 / 120.0 +
               x2 * (1.0 / 5040.0 +
               x2 * (-1.0 / 362880.0 +
               x2 * (1.0 / 39916800.0 +
               x2 * (-1.0 / 6227020800.0))))));
    }
    return 1.0 - std::sin(x) / x;
}

inline double sinc(double x) { return 1.0 - one_minus_sinc(x); }

// (1 - e^{-a t}) / a with the removable singularity at a = 0.
inline double decay_integral(double a, double t) {
    const double at = a * t;
    if (std::abs(at) < 1e-4) {
        // t (1 - at/2 + (at)^2/6 - (at)^3/24)
        return t * (1.0 - at / 2.0 + at * at / 6.0 - at * at * at / 24.0);
    }
    return -std::expm1(-at) / a;
}

} // namespace detail

} // namespace strobe
