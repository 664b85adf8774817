#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "strobe/common.hpp"
#include "strobe/physics.hpp"

// Closed-form predictions for stroboscopic readout of a Gaussian spin
// oscillator: duty-cycle functions, record/oscillator variance evolution,
// conditional squeezing, decoherence budgets, the cavity optimum and the
// thermal calibration factors.  These closed forms are the oracle the
// Monte-Carlo engine is checked against.

namespace strobe::analytics {

// Duty-cycle functions of the strobe.
//   sinc_pd = sinc(pi D)
//   b       = 1 + sinc(pi D)        (shot-noise / coupling factor)
//   c       = (1 - sinc) / (1 + sinc)  back-action coupling, 0 (QND) .. 1 (continuous)
struct StrobeProfile {
    double duty;
    double sinc_pd;
    double b;
    double c;
};

inline StrobeProfile strobe_profile(double duty) {
    if (!(duty > 0.0) || duty > 1.0)
        throw DomainError("strobe_profile: duty must be in (0,1]");
    const double oms = detail::one_minus_sinc(pi * duty);
    StrobeProfile p;
    p.duty = duty;
    p.sinc_pd = 1.0 - oms;
    p.b = 2.0 - oms;
    p.c = oms / (2.0 - oms);
    return p;
}

// Ground-state imprecision of the strobe-averaged quadrature,
// [1 + sinc(pi D)]^2 / 8.  Recovers 1/2 at D -> 0 and 1/8 at D = 1.
inline double ground_state_x_variance(const StrobeProfile& p) {
    return p.b * p.b / 8.0;
}

// The three additive contributions to the polarimetry record variance and
// the post-pulse oscillator variance.
//   var_sy    = (B N_ph / 8) [1 + kt^2 var_x_in + C kt^4 / 3]
//   var_x_out = var_x_in + C kt^2
// var_x_in is expressed in ground-state (zero-point) units: a ground-state
// oscillator has var_x_in = 1 at any duty cycle.
struct VariancePrediction {
    double var_sy;
    double var_x_out;
    double shot_term;
    double input_term;
    double ba_term;
};

inline VariancePrediction predict_variances(double kappa_tilde, const StrobeProfile& p,
                                            double n_ph, double var_x_in) {
    if (!(n_ph > 0.0)) throw DomainError("predict_variances: n_ph must be positive");
    if (var_x_in < 0.0) throw DomainError("predict_variances: var_x_in must be >= 0");
    const double kt2 = kappa_tilde * kappa_tilde;
    VariancePrediction v;
    v.shot_term = p.b * n_ph / 8.0;
    v.input_term = v.shot_term * kt2 * var_x_in;
    v.ba_term = v.shot_term * p.c * kt2 * kt2 / 3.0;
    v.var_sy = v.shot_term + v.input_term + v.ba_term;
    v.var_x_out = var_x_in + p.c * kt2;
    return v;
}

// Conditional squeezing xi0^2 after a strobe readout of strength kappa_tilde,
// in units of the ground-state imprecision.  Full duty-cycle dependence:
//   xi0^2 = 1 + C kt^2 - kt^2 (1 + C kt^2 / 2)^2 / (1 + kt^2 + C kt^4 / 3)
// which reduces to 1 / (1 + kt^2) as D -> 0.
inline double conditional_squeezing(double kappa_tilde, const StrobeProfile& p) {
    if (kappa_tilde < 0.0)
        throw DomainError("conditional_squeezing: kappa_tilde must be >= 0");
    const double kt2 = kappa_tilde * kappa_tilde;
    const double num = kt2 * (1.0 + 0.5 * kt2 * p.c) * (1.0 + 0.5 * kt2 * p.c);
    const double den = 1.0 + kt2 + p.c * kt2 * kt2 / 3.0;
    return 1.0 + kt2 * p.c - num / den;
}

// Same quantity assembled the long way round: build the joint Gaussian
// covariances of (record, final quadrature) from the per-cycle shot,
// input and back-action correlators and apply the Gaussian conditional
// variance formula Var(x|S) = Var(x) - Cov^2 / Var(S).  Used to
// cross-validate the collapsed closed form above.  var_in_zp is the input
// quadrature variance in ground-state units (1 = ground state); the result
// stays normalized to the ground-state imprecision.
inline double conditional_squeezing_by_covariances(double kappa_tilde,
                                                   const StrobeProfile& p,
                                                   double var_in_zp = 1.0) {
    if (kappa_tilde < 0.0)
        throw DomainError("conditional_squeezing_by_covariances: kappa_tilde must be >= 0");
    if (var_in_zp < 0.0)
        throw DomainError("conditional_squeezing_by_covariances: var_in_zp must be >= 0");
    const double s = p.sinc_pd;
    const double b = p.b;
    const double kt2 = kappa_tilde * kappa_tilde;

    // Arbitrary gauge: photons per cycle and number of cycles drop out.
    const double n_cycle = 8.0;
    const double n_m = 1024.0;
    const double u2 = 4.0 * kt2 / (b * n_cycle * n_m);  // beta^2 J_x

    const double var_x0 = b * b / 8.0;
    const double var_in = var_in_zp * var_x0;
    // back-action kernel: <x_BA(k1) x_BA(k2)> = 2 min(k1,k2) g  (many-cycle limit)
    const double g = u2 * n_cycle / 64.0 * (1.0 - s) * b * b;

    const double shot = n_m * n_cycle * b / 8.0;
    const double amp = std::sqrt(u2) * n_cycle / 2.0;  // beta sqrt(J_x) S_x T per cycle

    // sum_{k1,k2} 2 min -> 2 n_m^3 / 3,  sum_k 2k -> n_m^2,  <x_BA(n_m)^2> -> 2 n_m g
    const double var_s = shot + amp * amp * (n_m * n_m * var_in + (2.0 / 3.0) * n_m * n_m * n_m * g);
    const double cov = amp * (n_m * var_in + n_m * n_m * g);
    const double var_x = var_in + 2.0 * n_m * g;

    const double cond = var_x - cov * cov / var_s;
    return cond / var_x0;
}

// Total squeezing including decoherence noise.
//   eta_tau = zeta kt^2 / d_eff, times the intracavity-power factor
//   (2 / T_out - 1) when a cavity is given; xi^2 = xi0^2 + eta_tau.
struct SqueezingPrediction {
    double xi0_sq;
    double eta_tau;
    double xi_sq;
    double zeta;
    double d_eff;
};

inline SqueezingPrediction total_squeezing(double xi0_sq, double zeta, double kappa_tilde,
                                           double d_eff,
                                           const physics::CavityConfig* cavity = nullptr) {
    if (!(d_eff > 0.0)) throw DomainError("total_squeezing: d_eff must be positive");
    if (zeta < 0.0) throw DomainError("total_squeezing: zeta must be >= 0");
    double power_factor = 1.0;
    if (cavity) {
        if (cavity->t_out == 0.0)
            throw DomainError("total_squeezing: cavity output coupler transmission is zero");
        power_factor = 2.0 / cavity->t_out - 1.0;
    }
    SqueezingPrediction s;
    s.zeta = zeta;
    s.d_eff = d_eff;
    s.xi0_sq = xi0_sq;
    s.eta_tau = zeta * kappa_tilde * kappa_tilde / d_eff * power_factor;
    s.xi_sq = xi0_sq + s.eta_tau;
    return s;
}

// Cavity-optimized squeezing.  With the photon number and the output coupler
// transmission both free, the optimum sits at T_out = loss and
//   xi_opt^2 = (2 - x) x,  x = sqrt(zeta / ((2 F / pi) d0)),
// i.e. ~ sqrt(zeta / ((F / 2 pi) d0)) at leading order.
struct CavityOptimum {
    double xi_opt_sq;
    double t2_opt;
};

inline CavityOptimum optimal_cavity_squeezing(double zeta, double d0, double finesse,
                                              double loss) {
    if (!(zeta > 0.0) || !(d0 > 0.0) || !(finesse > 0.0) || !(loss > 0.0))
        throw DomainError("optimal_cavity_squeezing: all inputs must be positive");
    const double x2 = zeta / ((2.0 * finesse / pi) * d0);
    if (x2 > 1.0)
        throw DomainError("optimal_cavity_squeezing: zeta / ((2F/pi) d0) > 1, outside formula regime");
    const double x = std::sqrt(x2);
    return {(2.0 - x) * x, loss};
}

// Squeezing as a function of the bare coupling and the output coupler.
// The finesse follows the coupler choice: F = 2 pi / (t_in + t2 + loss).
inline double cavity_squeezing_objective(double kappa0_sq, double t2, double zeta,
                                         double d0, double loss, double t_in = 0.0) {
    const double finesse = two_pi / (t_in + t2 + loss);
    const double gain = 2.0 * finesse / pi;
    return 1.0 / (1.0 + gain * gain * kappa0_sq) +
           (zeta * kappa0_sq / d0) * (2.0 / t2 - 1.0);
}

struct CavityOptimumNumeric {
    double xi_sq;
    double t2;
    double kappa0_sq;
};

// Bounded grid search with refinement over (photon number ~ kappa0^2, T_out).
// Must agree with the closed form in its regime of validity.
inline CavityOptimumNumeric optimize_cavity_squeezing(double zeta, double d0, double loss,
                                                      double t_in = 0.0,
                                                      int grid_points = 121,
                                                      int refinements = 4) {
    if (!(zeta > 0.0) || !(d0 > 0.0) || !(loss > 0.0))
        throw DomainError("optimize_cavity_squeezing: zeta, d0 and loss must be positive");
    double t2_lo = loss / 16.0, t2_hi = std::min(0.95, 64.0 * loss);
    // center the coupling bracket on the closed-form estimate
    const double f_est = two_pi / (t_in + 2.0 * loss);
    const double x_est = std::sqrt(zeta / ((2.0 * f_est / pi) * d0));
    const double k_center = std::max(1e-12, (1.0 / x_est) / ((2.0 * f_est / pi) * (2.0 * f_est / pi)));
    double k_lo = k_center * 1e-3, k_hi = k_center * 1e3;

    CavityOptimumNumeric best{std::numeric_limits<double>::infinity(), 0.0, 0.0};
    for (int pass = 0; pass < refinements; ++pass) {
        const double lt_lo = std::log(t2_lo), lt_hi = std::log(t2_hi);
        const double lk_lo = std::log(k_lo), lk_hi = std::log(k_hi);
        const double lt_step = (lt_hi - lt_lo) / (grid_points - 1);
        const double lk_step = (lk_hi - lk_lo) / (grid_points - 1);
        for (int i = 0; i < grid_points; ++i) {
            const double t2 = std::exp(lt_lo + lt_step * i);
            for (int j = 0; j < grid_points; ++j) {
                const double k = std::exp(lk_lo + lk_step * j);
                const double v = cavity_squeezing_objective(k, t2, zeta, d0, loss, t_in);
                if (v < best.xi_sq) best = {v, t2, k};
            }
        }
        // zoom to a two-cell window around the incumbent
        t2_lo = std::max(1e-9, best.t2 * std::exp(-2.0 * lt_step));
        t2_hi = std::min(0.95, best.t2 * std::exp(2.0 * lt_step));
        k_lo = best.kappa0_sq * std::exp(-2.0 * lk_step);
        k_hi = best.kappa0_sq * std::exp(2.0 * lk_step);
    }
    return best;
}

namespace detail {

// d/da of (1 - e^{-a tau}) / a, stable at small |a tau|.
inline double decay_integral_deriv(double a, double tau) {
    const double x = a * tau;
    if (std::abs(x) < 1e-4) {
        return tau * tau * (-0.5 + x / 3.0 - x * x / 8.0 + x * x * x / 30.0);
    }
    return (std::exp(-x) * (1.0 + x) - 1.0) / (a * a);
}

} // namespace detail

// Calibration factor for a decaying oscillator read out through an
// exponential mode function u ~ e^{-gamma_m t} (gamma_m < 0 gives the rising
// mode).  Returns the factor multiplying beta^2 S_x tau <Jz^2> in the
// PSN-normalized record variance.  For gamma_m = +/- gamma it reduces to
//   (1 + g t - g t coth(g t)) / (g t),
// and tends to 1 as gamma tau -> 0.  Removable singularities (gamma_m -> 0,
// gamma_m -> +/- gamma) are handled by series switchover.
inline double thermal_calibration_factor(double gamma, double gamma_m, double tau) {
    if (!(tau > 0.0)) throw DomainError("thermal_calibration_factor: tau must be positive");
    if (gamma < 0.0) throw DomainError("thermal_calibration_factor: gamma must be >= 0");
    const double a = 2.0 * gamma_m;
    const double b = gamma + gamma_m;
    const double ha = strobe::detail::decay_integral(a, tau);
    double dd;
    if (std::abs((a - b) * tau) < 1e-4) {
        dd = detail::decay_integral_deriv(0.5 * (a + b), tau);
    } else {
        dd = (ha - strobe::detail::decay_integral(b, tau)) / (a - b);
    }
    return -2.0 * dd / (tau * ha);
}

// Ground-state noise inferred from an unpolarized-ensemble measurement:
// (6F / ((F+1)(2F+1))) * (thermal_ratio - 1), with thermal_ratio the
// thermal record variance in photon shot noise units.
inline double ground_noise_from_thermal(double thermal_ratio, int f_spin) {
    if (thermal_ratio < 1.0)
        throw DomainError("ground_noise_from_thermal: thermal_ratio below shot noise");
    if (f_spin < 1) throw DomainError("ground_noise_from_thermal: f_spin must be >= 1");
    const double f = static_cast<double>(f_spin);
    return 6.0 * f / ((f + 1.0) * (2.0 * f + 1.0)) * (thermal_ratio - 1.0);
}

// Dark thermalization of a ground-state-initialized oscillator:
// n(t) = f_factor (e^{t/T1} - 1), valid for 0 <= t <= T1.
inline double dark_thermalization(double t, double t1, double f_factor) {
    if (!(t1 > 0.0)) throw DomainError("dark_thermalization: t1 must be positive");
    if (!(f_factor > 0.0)) throw DomainError("dark_thermalization: f_factor must be positive");
    if (t < 0.0 || t > t1)
        throw RangeError("dark_thermalization: t outside validity window [0, T1]");
    return f_factor * std::expm1(t / t1);
}

} // namespace strobe::analytics
