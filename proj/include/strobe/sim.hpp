#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "strobe/analytics.hpp"
#include "strobe/common.hpp"
#include "strobe/physics.hpp"
#include "strobe/rng.hpp"

// Monte-Carlo trajectory engine for stroboscopic readout of a Gaussian spin
// oscillator.  Each trajectory tracks the conditional Gaussian state
// (mean, 2x2 covariance) of the oscillator given its own measurement record;
// the record itself is sampled through the innovation representation, so the
// ensemble of records reproduces the full quantum statistics while the
// per-trajectory covariance obeys the Heisenberg bound det(cov) >= 1/4 at
// every step.  Back-action enters as deterministic covariance growth of the
// momentum quadrature; each light segment satisfies the minimal
// measurement/disturbance balance exactly, independent of the step size.

namespace strobe::sim {

struct OscillatorState {
    double mx = 0.0, mp = 0.0;            // conditional means of (X, P)
    double sxx = 0.5, sxp = 0.0, spp = 0.5;  // conditional covariance
    double jx = 0.0;                      // current macroscopic spin
    double time = 0.0;                    // elapsed time (s)

    double det() const { return sxx * spp - sxp * sxp; }
};

enum class InitKind { ground, thermal, unpolarized_thermal };

// Initial Gaussian state.  thermal uses cov = diag((1+n)/2, (1+n)/2);
// unpolarized_thermal scales the spin variance (2F+1)/(4F) * N_at F(F+1)/3
// through the coherent-state J_x = N_at F normalization.
inline OscillatorState init_state(InitKind kind, double n_bar,
                                  const physics::EnsembleConfig& e, int f_spin = 4) {
    OscillatorState s;
    s.jx = e.jx;
    switch (kind) {
        case InitKind::ground:
            s.sxx = s.spp = 0.5;
            break;
        case InitKind::thermal:
            if (n_bar < 0.0) throw DomainError("init_state: thermal occupancy must be >= 0");
            s.sxx = s.spp = 0.5 * (1.0 + n_bar);
            break;
        case InitKind::unpolarized_thermal: {
            const double f = static_cast<double>(f_spin);
            const double jz2 = (2.0 * f + 1.0) / (4.0 * f) * e.n_at * f * (f + 1.0) / 3.0;
            const double jx_ref = e.n_at * f;
            s.sxx = s.spp = jz2 / jx_ref;
            s.jx = jx_ref;
            break;
        }
    }
    return s;
}

// Zeeman populations p_m (m = -F..F) under a spin-temperature distribution
// p_m ~ eps^m, with eps solved so the mean orientation matches
// sum(m p_m) = -orientation * F (full orientation pumps into m = -F).
inline std::vector<double> spin_temperature_populations(double orientation, int f_spin) {
    if (orientation < 0.0 || orientation > 1.0)
        throw DomainError("spin_temperature_populations: orientation must be in [0,1]");
    const int n = 2 * f_spin + 1;
    std::vector<double> p(n, 0.0);
    if (orientation >= 1.0) {
        p[0] = 1.0;
        return p;
    }
    if (orientation == 0.0) {
        for (double& v : p) v = 1.0 / n;
        return p;
    }
    const double target = -orientation * f_spin;
    auto mean_m = [&](double eps) {
        double z = 0.0, s = 0.0;
        for (int m = -f_spin; m <= f_spin; ++m) {
            const double w = std::pow(eps, m + f_spin);  // rescaled, same ratios
            z += w;
            s += m * w;
        }
        return s / z;
    };
    // mean_m is monotone increasing in eps: bisect on (0, 1)
    double lo = 1e-300, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean_m(mid) < target ? lo : hi) = mid;
    }
    const double eps = 0.5 * (lo + hi);
    double z = 0.0;
    for (int m = -f_spin; m <= f_spin; ++m) z += std::pow(eps, m + f_spin);
    for (int m = -f_spin; m <= f_spin; ++m) p[m + f_spin] = std::pow(eps, m + f_spin) / z;
    return p;
}

struct ModeFunction {
    enum class Kind { flat, exp_rising, exp_falling };
    Kind kind = Kind::flat;
    double rate = 0.0;  // gamma_m (1/s)

    // normalization: integral of u^2 over the pulse equals 2, matching the
    // exponential-mode convention sqrt(4 g / (e^{2 g tau} - 1)) etc.
    double weight(double t_local, double tau) const {
        switch (kind) {
            case Kind::flat:
                return std::sqrt(2.0 / tau);
            case Kind::exp_rising: {
                const double c2 = 2.0 / detail::decay_integral(-2.0 * rate, tau);
                return std::sqrt(c2) * std::exp(rate * t_local);
            }
            case Kind::exp_falling: {
                const double c2 = 2.0 / detail::decay_integral(2.0 * rate, tau);
                return std::sqrt(c2) * std::exp(-rate * t_local);
            }
        }
        return 0.0;
    }
};

struct PulseSchedule {
    double omega = two_pi * 380e3;  // Larmor angular frequency (rad/s)
    int steps_per_period = 256;
    double duty = 0.15;
    int cycles_a = 24;      // complete oscillation periods in pulse A
    int cycles_b = 0;       // periods in pulse B (0 = single pulse)
    int gap_cycles = 0;     // dark periods between the pulses
    double flux_bar = 1e8;  // period-averaged photon flux (photons/s)
    bool tensor_enabled = false;

    double period() const { return two_pi / omega; }
    double tau_a() const { return cycles_a * period(); }
    double tau_b() const { return cycles_b * period(); }

    // pulse durations given in seconds must be whole numbers of periods
    static PulseSchedule from_durations(double omega, int steps_per_period, double duty,
                                        double tau_a, double tau_b, double gap,
                                        double flux_bar) {
        PulseSchedule s;
        s.omega = omega;
        s.steps_per_period = steps_per_period;
        s.duty = duty;
        s.flux_bar = flux_bar;
        const double t = two_pi / omega;
        auto to_cycles = [&](double tau, const char* which) {
            const double c = tau / t;
            const double r = std::round(c);
            if (std::abs(c - r) > 1e-6 * std::max(1.0, c))
                throw ConfigError(std::string("PulseSchedule: ") + which +
                                  " is not a whole number of oscillation periods");
            return static_cast<int>(r);
        };
        s.cycles_a = to_cycles(tau_a, "tau_a");
        s.cycles_b = tau_b > 0.0 ? to_cycles(tau_b, "tau_b") : 0;
        s.gap_cycles = gap > 0.0 ? to_cycles(gap, "gap") : 0;
        return s;
    }

    void validate() const {
        if (steps_per_period < 8 || steps_per_period % 4 != 0)
            throw GridError("PulseSchedule: steps_per_period must be a multiple of 4 (>= 8)");
        if (!(duty > 0.0) || duty > 1.0)
            throw DomainError("PulseSchedule: duty must be in (0,1]");
        if (cycles_a < 1) throw ConfigError("PulseSchedule: cycles_a must be >= 1");
        if (!(omega > 0.0)) throw ConfigError("PulseSchedule: omega must be positive");
        if (!(flux_bar > 0.0)) throw ConfigError("PulseSchedule: flux_bar must be positive");
        const int h = half_window_steps();
        if (h < 2)
            throw GridError("PulseSchedule: strobe window under-resolved (< 4 grid steps); "
                            "increase steps_per_period");
    }

    // half-width of each strobe window in grid steps (windows sit at the
    // cos^2 maxima, two per period, each 2h steps wide)
    int half_window_steps() const {
        const int h = static_cast<int>(std::lround(duty * steps_per_period / 4.0));
        return std::max(h, 1);
    }

    double duty_effective() const {
        return 4.0 * half_window_steps() / static_cast<double>(steps_per_period);
    }
};

// Per-square-root-flux coupling of the probe to the oscillator.
struct ProbeCoupling {
    double beta = 0.0;      // Faraday coupling (dimensionless)
    double w = 0.0;         // tensor ratio 14 a2/a1
    double gamma_sw = 0.0;  // swap rate at the period-averaged flux (1/s)
    double pol_sign = -1.0; // sign of S_x: +1 x-polarized, -1 y-polarized
};

inline ProbeCoupling coupling_from_physics(const physics::CouplingSet& c,
                                           physics::PolarizationAxis axis) {
    ProbeCoupling p;
    p.beta = c.beta;
    p.w = c.w;
    p.gamma_sw = c.gamma_sw;
    p.pol_sign = axis == physics::PolarizationAxis::x ? 1.0 : -1.0;
    return p;
}

// beta that realizes a target kappa_tilde^2 for a pulse of given length:
// kappa_tilde^2 = (1/4) beta^2 J_x flux tau [1 + sinc(pi D)]
inline double beta_for_kappa_tilde_sq(double kappa_tilde_sq, double jx, double flux_bar,
                                      double tau, double duty) {
    if (!(jx > 0.0) || !(flux_bar > 0.0) || !(tau > 0.0))
        throw DomainError("beta_for_kappa_tilde_sq: jx, flux and tau must be positive");
    const double b = 2.0 - detail::one_minus_sinc(pi * duty);
    return std::sqrt(4.0 * kappa_tilde_sq / (jx * flux_bar * tau * b));
}

struct DecoherenceConfig {
    double gamma_dark = 0.0;    // dark transverse decay rate (1/s)
    double n_bar_bath = 0.0;    // occupancy of the bath the dark decay restores
    double gamma_depump = 0.0;  // J_x decay rate during probing (1/s of pulse time)
    double zeta_over_deff = 0.0;  // probe-induced noise: eta = (zeta/d) kappa_tilde^2
    bool back_action = true;      // disable for readout of unpolarized ensembles
    bool probe_noise_pulse_a = true;
    bool probe_noise_pulse_b = true;
};

struct TrajectoryRecord {
    double q_a = 0.0;
    double q_b = 0.0;
    std::vector<double> per_cycle;  // [cycle][{Y_cos, Y_sin}] flattened, A then B
    std::uint64_t seed = 0;
};

struct RunResult {
    std::vector<TrajectoryRecord> records;
    double psn_a = 0.0, psn_b = 0.0;  // exact shot-noise variance of q_a, q_b
    double f_d = 1.0;                 // J_x(end of pulse A) / J_x(0)
    double min_det = 0.0;             // smallest det(cov) over the run
    double duty_effective = 0.0;
    double kappa_tilde_sq_a = 0.0, kappa_tilde_sq_b = 0.0;
    // unconditional end-of-run quadrature variances (law of total variance)
    double uncond_var_x_end = 0.0, uncond_var_p_end = 0.0;
};

namespace detail {

using strobe::detail::one_minus_sinc;

// Precomputed per-period step tables shared by all trajectories.
struct Tables {
    int n = 0, h = 0;
    double dt = 0.0;
    double rot_half_c = 1.0, rot_half_s = 0.0;
    double phi_peak = 0.0;
    double duty_eff = 0.0;
    // illuminated step midpoint phases, in period order
    std::vector<double> cos_mid, sin_mid;
    // dark span lengths (steps) after window A half and after window B
    int dark_span = 0;
    double dark_rot_c = 1.0, dark_rot_s = 0.0;
    double sum_cos2 = 0.0;  // sum of cos^2 over illuminated steps of one period

    Tables(const PulseSchedule& sch) {
        sch.validate();
        n = sch.steps_per_period;
        h = sch.half_window_steps();
        const double t = sch.period();
        dt = t / n;
        const double theta = sch.omega * dt;
        rot_half_c = std::cos(0.5 * theta);
        rot_half_s = std::sin(0.5 * theta);
        duty_eff = sch.duty_effective();
        phi_peak = sch.flux_bar / duty_eff;

        // window A: steps [-h, h) around t = 0 (start of period offset by -h),
        // window B: steps [n/2 - h, n/2 + h).  We unroll the period starting
        // at step -h so it begins with a full window.
        auto push = [&](int step) {
            const double tm = (step + 0.5) * dt;
            cos_mid.push_back(std::cos(sch.omega * tm));
            sin_mid.push_back(std::sin(sch.omega * tm));
            sum_cos2 += cos_mid.back() * cos_mid.back();
        };
        for (int i = -h; i < h; ++i) push(i);
        for (int i = n / 2 - h; i < n / 2 + h; ++i) push(i);
        dark_span = n / 2 - 2 * h;
        const double span_angle = sch.omega * dark_span * dt;
        dark_rot_c = std::cos(span_angle);
        dark_rot_s = std::sin(span_angle);
    }
};

inline void rotate(OscillatorState& s, double c, double sn) {
    const double mx = c * s.mx + sn * s.mp;
    const double mp = -sn * s.mx + c * s.mp;
    s.mx = mx;
    s.mp = mp;
    const double xx = c * c * s.sxx + 2.0 * c * sn * s.sxp + sn * sn * s.spp;
    const double xp = (c * c - sn * sn) * s.sxp + c * sn * (s.spp - s.sxx);
    const double pp = sn * sn * s.sxx - 2.0 * c * sn * s.sxp + c * c * s.spp;
    s.sxx = xx;
    s.sxp = xp;
    s.spp = pp;
}

// Gaussian contact with an isotropic bath: decay of the means at rate g and
// relaxation of the covariance toward (1+2n)/2 * I.  Completely positive for
// n >= 0, so it cannot break the Heisenberg floor.
inline void bath_contact(OscillatorState& s, double g, double duration, double n_bath) {
    if (g <= 0.0 || duration <= 0.0) return;
    const double lam = std::exp(-g * duration);
    const double lam2 = lam * lam;
    const double target = 0.5 * (1.0 + 2.0 * n_bath);
    s.mx *= lam;
    s.mp *= lam;
    s.sxx = lam2 * s.sxx + (1.0 - lam2) * target;
    s.sxp = lam2 * s.sxp;
    s.spp = lam2 * s.spp + (1.0 - lam2) * target;
}

// All per-step constants of one illuminated step at unit J_x; the sqrt(jx)
// scaling is applied inside the step because J_x may decay during the pulse.
struct LightStep {
    double c_unit;     // record coefficient per sqrt(jx): beta * S_x * dt
    double r_noise;    // shot variance of the step-integrated record
    double q_ba_unit;  // back-action kick variance per jx
    double q_wx_unit;  // tensor S_y drive variance per jx
    double g_xy_unit;  // tensor drive / record-noise covariance per sqrt(jx)
    double lam_sw;     // tensor swap decay factor per step
    double depump;     // multiplicative jx decay per illuminated step
    double probe_diff; // probe-decoherence diffusion per step (per quadrature)
    bool tensor = false;
    bool back_action = true;
};

inline void light_interact(OscillatorState& s, const LightStep& L, rng::TrajectoryRng& rng,
                           double& y_out) {
    const double sqjx = std::sqrt(s.jx);
    // tensor swap: vacuum contact (or, for negative gamma_sw, the
    // phase-insensitive amplification channel) plus the S_y-correlated drive
    double q_wx = 0.0, g_xy = 0.0;
    if (L.tensor) {
        const double lam2 = L.lam_sw * L.lam_sw;
        const double add = 0.5 * std::abs(1.0 - lam2);
        s.mx *= L.lam_sw;
        s.mp *= L.lam_sw;
        s.sxx = lam2 * s.sxx + add;
        s.sxp = lam2 * s.sxp;
        s.spp = lam2 * s.spp + add;
        q_wx = L.q_wx_unit * s.jx;
        g_xy = L.g_xy_unit * sqjx;
    }
    const double c = L.c_unit * sqjx;
    const double s_innov = c * c * s.sxx + L.r_noise;
    const double vx = c * s.sxx + g_xy;
    const double vp = c * s.sxp;
    const double e = rng.gaussian(std::sqrt(s_innov));
    y_out = c * s.mx + e;
    s.mx += vx / s_innov * e;
    s.mp += vp / s_innov * e;
    const double q_ba = L.back_action ? L.q_ba_unit * s.jx : 0.0;
    s.sxx += q_wx + L.probe_diff - vx * vx / s_innov;
    s.sxp += -vx * vp / s_innov;
    s.spp += q_ba + L.probe_diff - vp * vp / s_innov;
    s.jx *= L.depump;
}

inline LightStep make_light_step(const Tables& tb, const PulseSchedule& sch,
                                 const ProbeCoupling& pc, const DecoherenceConfig& dec,
                                 double probe_diff) {
    LightStep L;
    const double sx = pc.pol_sign * tb.phi_peak / 2.0;
    L.c_unit = pc.beta * sx * tb.dt;
    L.r_noise = tb.phi_peak / 4.0 * tb.dt;
    L.q_ba_unit = pc.beta * pc.beta * tb.phi_peak / 4.0 * tb.dt;
    L.q_wx_unit = (pc.beta * pc.w) * (pc.beta * pc.w) * tb.phi_peak / 4.0 * tb.dt;
    L.g_xy_unit = pc.beta * pc.w * tb.phi_peak / 4.0 * tb.dt;
    L.lam_sw = std::exp(-(pc.gamma_sw / tb.duty_eff) * tb.dt);
    L.depump = std::exp(-(dec.gamma_depump / tb.duty_eff) * tb.dt);
    L.probe_diff = probe_diff;
    L.tensor = sch.tensor_enabled;
    L.back_action = dec.back_action;
    return L;
}

// One full oscillation period: window A, dark span, window B, dark span.
inline void advance_period(OscillatorState& state, const Tables& tb, const LightStep& L,
                           const DecoherenceConfig& dec, rng::TrajectoryRng& rng,
                           double& y_cos, double& y_sin) {
    y_cos = 0.0;
    y_sin = 0.0;
    int idx = 0;
    auto lit_block = [&](int count) {
        for (int i = 0; i < count; ++i, ++idx) {
            rotate(state, tb.rot_half_c, tb.rot_half_s);
            double y = 0.0;
            light_interact(state, L, rng, y);
            y_cos += y * tb.cos_mid[idx];
            y_sin += y * tb.sin_mid[idx];
            rotate(state, tb.rot_half_c, tb.rot_half_s);
        }
        bath_contact(state, dec.gamma_dark, count * tb.dt, dec.n_bar_bath);
    };
    auto dark_block = [&]() {
        if (tb.dark_span <= 0) return;
        rotate(state, tb.dark_rot_c, tb.dark_rot_s);
        bath_contact(state, dec.gamma_dark, tb.dark_span * tb.dt, dec.n_bar_bath);
    };
    lit_block(2 * tb.h);
    dark_block();
    lit_block(2 * tb.h);
    dark_block();
    state.time += tb.n * tb.dt;
}

} // namespace detail

// Exact shot-noise variance of the mode-weighted, cosine-demodulated record
// for one pulse of the schedule (the analytic counterpart of
// shot_noise_reference, with the identical discrete protocol).
inline double shot_noise_exact(const PulseSchedule& sch, const ModeFunction& mode,
                               int cycles) {
    detail::Tables tb(sch);
    const double r = tb.phi_peak / 4.0 * tb.dt;
    const double tau = cycles * sch.period();
    double psn = 0.0;
    for (int k = 0; k < cycles; ++k) {
        const double u = mode.weight((k + 0.5) * sch.period(), tau);
        psn += u * u * tb.sum_cos2 * r;
    }
    return psn;
}

// Continuum-model kappa_tilde^2 for a pulse of the schedule at spin jx.
inline double kappa_tilde_sq(const PulseSchedule& sch, const ProbeCoupling& pc, double jx,
                             int cycles) {
    const double b = 2.0 - detail::one_minus_sinc(pi * sch.duty_effective());
    return 0.25 * pc.beta * pc.beta * jx * sch.flux_bar * (cycles * sch.period()) * b;
}

// Advances the state through one full oscillation period and returns the
// cosine/sine demodulated record quadratures of that cycle.
inline void step_period(OscillatorState& state, const PulseSchedule& sch,
                        const ProbeCoupling& pc, const DecoherenceConfig& dec,
                        rng::TrajectoryRng& rng, double& y_cos, double& y_sin) {
    detail::Tables tb(sch);
    const double kt2_a = kappa_tilde_sq(sch, pc, state.jx, sch.cycles_a);
    const double eta = dec.probe_noise_pulse_a ? dec.zeta_over_deff * kt2_a : 0.0;
    const double diff = sch.cycles_a > 0 ? 0.5 * eta / (sch.cycles_a * 4.0 * tb.h) : 0.0;
    const detail::LightStep L = detail::make_light_step(tb, sch, pc, dec, diff);
    detail::advance_period(state, tb, L, dec, rng, y_cos, y_sin);
}

// Advances one dark period (no light): a whole-period rotation is the
// identity, so only dark decoherence acts.
inline void step_period_dark(OscillatorState& state, const PulseSchedule& sch,
                             const DecoherenceConfig& dec) {
    detail::bath_contact(state, dec.gamma_dark, sch.period(), dec.n_bar_bath);
    state.time += sch.period();
}

// Two-pulse protocol: pulse A (mode_a-weighted record q_a), dark gap,
// pulse B (mode_b-weighted record q_b).  cycles_b = 0 degenerates to a
// single-pulse run.  Trajectories are independent and may run on n_jobs
// threads; results are indexed by trajectory, so aggregate statistics do not
// depend on the thread count.
inline RunResult run_two_pulse(const PulseSchedule& sch, const ProbeCoupling& pc,
                               const DecoherenceConfig& dec, const OscillatorState& init,
                               const ModeFunction& mode_a, const ModeFunction& mode_b,
                               int n_traj, std::uint64_t base_seed, int n_jobs = 1,
                               bool keep_per_cycle = false) {
    if (n_traj < 2) throw ConfigError("run_two_pulse: need at least two trajectories");
    if (!(init.jx > 0.0)) throw ConfigError("run_two_pulse: initial J_x must be positive");
    detail::Tables tb(sch);
    RunResult out;
    out.duty_effective = tb.duty_eff;
    out.kappa_tilde_sq_a = kappa_tilde_sq(sch, pc, init.jx, sch.cycles_a);
    out.kappa_tilde_sq_b = kappa_tilde_sq(sch, pc, init.jx, sch.cycles_b);
    out.psn_a = shot_noise_exact(sch, mode_a, sch.cycles_a);
    out.psn_b = sch.cycles_b > 0 ? shot_noise_exact(sch, mode_b, sch.cycles_b) : 0.0;

    const int lit_per_cycle = 4 * tb.h;
    const double eta_a = dec.probe_noise_pulse_a
                             ? dec.zeta_over_deff * out.kappa_tilde_sq_a
                             : 0.0;
    const double eta_b = dec.probe_noise_pulse_b && sch.cycles_b > 0
                             ? dec.zeta_over_deff * out.kappa_tilde_sq_b
                             : 0.0;
    const detail::LightStep step_a = detail::make_light_step(
        tb, sch, pc, dec, sch.cycles_a > 0 ? 0.5 * eta_a / (sch.cycles_a * lit_per_cycle) : 0.0);
    const detail::LightStep step_b = detail::make_light_step(
        tb, sch, pc, dec, sch.cycles_b > 0 ? 0.5 * eta_b / (sch.cycles_b * lit_per_cycle) : 0.0);

    const double tau_a = sch.tau_a();
    const double tau_b = sch.tau_b();
    std::vector<double> wa(sch.cycles_a), wb(sch.cycles_b);
    for (int k = 0; k < sch.cycles_a; ++k) wa[k] = mode_a.weight((k + 0.5) * sch.period(), tau_a);
    for (int k = 0; k < sch.cycles_b; ++k) wb[k] = mode_b.weight((k + 0.5) * sch.period(), tau_b);

    out.records.assign(n_traj, TrajectoryRecord{});
    std::vector<double> end_mx(n_traj), end_mp(n_traj), end_sxx(n_traj), end_spp(n_traj);

    // The covariance recursion is deterministic (identical across
    // trajectories): track the Heisenberg floor and f_d in a single dry pass.
    {
        OscillatorState s = init;
        rng::TrajectoryRng dry(base_seed, 0);
        double mind = s.det();
        double yc, ys;
        auto scan = [&](const detail::LightStep& L, int cycles) {
            for (int k = 0; k < cycles; ++k) {
                detail::advance_period(s, tb, L, dec, dry, yc, ys);
                mind = std::min(mind, s.det());
            }
        };
        scan(step_a, sch.cycles_a);
        out.f_d = s.jx / init.jx;
        for (int k = 0; k < sch.gap_cycles; ++k) step_period_dark(s, sch, dec);
        scan(step_b, sch.cycles_b);
        out.min_det = mind;
    }

    auto worker = [&](int t0, int t1) {
        for (int t = t0; t < t1; ++t) {
            rng::TrajectoryRng rng(base_seed, static_cast<std::uint64_t>(t));
            OscillatorState s = init;
            TrajectoryRecord& rec = out.records[t];
            rec.seed = rng::stream_seed(base_seed, static_cast<std::uint64_t>(t));
            if (keep_per_cycle) rec.per_cycle.reserve(2 * (sch.cycles_a + sch.cycles_b));
            double yc, ys;
            for (int k = 0; k < sch.cycles_a; ++k) {
                detail::advance_period(s, tb, step_a, dec, rng, yc, ys);
                rec.q_a += wa[k] * yc;
                if (keep_per_cycle) {
                    rec.per_cycle.push_back(yc);
                    rec.per_cycle.push_back(ys);
                }
            }
            for (int k = 0; k < sch.gap_cycles; ++k) step_period_dark(s, sch, dec);
            for (int k = 0; k < sch.cycles_b; ++k) {
                detail::advance_period(s, tb, step_b, dec, rng, yc, ys);
                rec.q_b += wb[k] * yc;
                if (keep_per_cycle) {
                    rec.per_cycle.push_back(yc);
                    rec.per_cycle.push_back(ys);
                }
            }
            end_mx[t] = s.mx;
            end_mp[t] = s.mp;
            end_sxx[t] = s.sxx;
            end_spp[t] = s.spp;
        }
    };
    if (n_jobs <= 1) {
        worker(0, n_traj);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n_traj + n_jobs - 1) / n_jobs;
        for (int j = 0; j < n_jobs; ++j) {
            const int t0 = j * chunk;
            const int t1 = std::min(n_traj, t0 + chunk);
            if (t0 < t1) pool.emplace_back(worker, t0, t1);
        }
        for (auto& th : pool) th.join();
    }

    // unconditional variances by the law of total variance (fixed order)
    double sx = 0.0, sx2 = 0.0, sp = 0.0, sp2 = 0.0, cxx = 0.0, cpp = 0.0;
    for (int t = 0; t < n_traj; ++t) {
        sx += end_mx[t];
        sx2 += end_mx[t] * end_mx[t];
        sp += end_mp[t];
        sp2 += end_mp[t] * end_mp[t];
        cxx += end_sxx[t];
        cpp += end_spp[t];
    }
    const double n = static_cast<double>(n_traj);
    out.uncond_var_x_end = (sx2 - sx * sx / n) / (n - 1.0) + cxx / n;
    out.uncond_var_p_end = (sp2 - sp * sp / n) / (n - 1.0) + cpp / n;
    return out;
}

inline RunResult run_single_pulse(const PulseSchedule& sch, const ProbeCoupling& pc,
                                  const DecoherenceConfig& dec, const OscillatorState& init,
                                  const ModeFunction& mode, int n_traj,
                                  std::uint64_t base_seed, int n_jobs = 1,
                                  bool keep_per_cycle = false) {
    PulseSchedule s1 = sch;
    s1.cycles_b = 0;
    s1.gap_cycles = 0;
    return run_two_pulse(s1, pc, dec, init, mode, ModeFunction{}, n_traj, base_seed,
                         n_jobs, keep_per_cycle);
}

// Exact ensemble variance of the pulse-A record for the discrete model:
// propagates the joint covariance of (conditional mean, accumulated record)
// through the same per-step coefficients the trajectory sampler uses.  No
// Monte-Carlo noise; used for grid-convergence checks and fast predictions.
inline double predicted_record_variance(const PulseSchedule& sch, const ProbeCoupling& pc,
                                        const DecoherenceConfig& dec,
                                        const OscillatorState& init,
                                        const ModeFunction& mode) {
    detail::Tables tb(sch);
    const double kt2_a = kappa_tilde_sq(sch, pc, init.jx, sch.cycles_a);
    const double eta = dec.probe_noise_pulse_a ? dec.zeta_over_deff * kt2_a : 0.0;
    const detail::LightStep L = detail::make_light_step(
        tb, sch, pc, dec, sch.cycles_a > 0 ? 0.5 * eta / (sch.cycles_a * 4.0 * tb.h) : 0.0);

    OscillatorState s = init;        // conditional covariance recursion
    double mxx = 0.0, mxp = 0.0, mpp = 0.0;  // cov of the conditional means
    double qq = 0.0, qx = 0.0, qp = 0.0;     // record variance and cross terms
    const double tau = sch.cycles_a * sch.period();

    auto rotate_means = [&](double c, double sn) {
        detail::rotate(s, c, sn);
        const double xx = c * c * mxx + 2.0 * c * sn * mxp + sn * sn * mpp;
        const double xp = (c * c - sn * sn) * mxp + c * sn * (mpp - mxx);
        const double pp = sn * sn * mxx - 2.0 * c * sn * mxp + c * c * mpp;
        mxx = xx;
        mxp = xp;
        mpp = pp;
        const double nqx = c * qx + sn * qp;
        const double nqp = -sn * qx + c * qp;
        qx = nqx;
        qp = nqp;
    };
    auto contact_means = [&](double g, double duration) {
        if (g <= 0.0 || duration <= 0.0) return;
        const double lam = std::exp(-g * duration);
        mxx *= lam * lam;
        mxp *= lam * lam;
        mpp *= lam * lam;
        qx *= lam;
        qp *= lam;
    };

    for (int k = 0; k < sch.cycles_a; ++k) {
        const double u = mode.weight((k + 0.5) * sch.period(), tau);
        int idx = 0;
        auto lit_block = [&](int count) {
            for (int i = 0; i < count; ++i, ++idx) {
                rotate_means(tb.rot_half_c, tb.rot_half_s);
                const double sqjx = std::sqrt(s.jx);
                double g_xy = 0.0;
                if (L.tensor) {
                    const double lam2 = L.lam_sw * L.lam_sw;
                    const double add = 0.5 * std::abs(1.0 - lam2);
                    s.mx *= L.lam_sw;
                    s.mp *= L.lam_sw;
                    s.sxx = lam2 * s.sxx + add;
                    s.sxp = lam2 * s.sxp;
                    s.spp = lam2 * s.spp + add;
                    mxx *= lam2;
                    mxp *= lam2;
                    mpp *= lam2;
                    qx *= L.lam_sw;
                    qp *= L.lam_sw;
                    g_xy = L.g_xy_unit * sqjx;
                }
                const double c = L.c_unit * sqjx;
                const double s_innov = c * c * s.sxx + L.r_noise;
                const double vx = c * s.sxx + g_xy;
                const double vp = c * s.sxp;
                const double gx = vx / s_innov, gp = vp / s_innov;
                const double a = u * tb.cos_mid[idx] * c;
                const double b = u * tb.cos_mid[idx];
                // q' = q + a mx + b e;  mx' = mx + gx e;  mp' = mp + gp e
                const double qq_new = qq + 2.0 * a * qx + a * a * mxx + b * b * s_innov;
                const double qx_new = qx + a * mxx + b * gx * s_innov;
                const double qp_new = qp + a * mxp + b * gp * s_innov;
                const double mxx_new = mxx + gx * gx * s_innov;
                const double mxp_new = mxp + gx * gp * s_innov;
                const double mpp_new = mpp + gp * gp * s_innov;
                qq = qq_new;
                qx = qx_new;
                qp = qp_new;
                mxx = mxx_new;
                mxp = mxp_new;
                mpp = mpp_new;
                const double q_ba = L.back_action ? L.q_ba_unit * s.jx : 0.0;
                const double q_wx = L.tensor ? L.q_wx_unit * s.jx : 0.0;
                s.sxx += q_wx + L.probe_diff - vx * vx / s_innov;
                s.sxp += -vx * vp / s_innov;
                s.spp += q_ba + L.probe_diff - vp * vp / s_innov;
                s.jx *= L.depump;
                rotate_means(tb.rot_half_c, tb.rot_half_s);
            }
            detail::bath_contact(s, dec.gamma_dark, count * tb.dt, dec.n_bar_bath);
            contact_means(dec.gamma_dark, count * tb.dt);
        };
        lit_block(2 * tb.h);
        if (tb.dark_span > 0) {
            rotate_means(tb.dark_rot_c, tb.dark_rot_s);
            detail::bath_contact(s, dec.gamma_dark, tb.dark_span * tb.dt, dec.n_bar_bath);
            contact_means(dec.gamma_dark, tb.dark_span * tb.dt);
        }
        lit_block(2 * tb.h);
        if (tb.dark_span > 0) {
            rotate_means(tb.dark_rot_c, tb.dark_rot_s);
            detail::bath_contact(s, dec.gamma_dark, tb.dark_span * tb.dt, dec.n_bar_bath);
            contact_means(dec.gamma_dark, tb.dark_span * tb.dt);
        }
    }
    return qq;
}

// Monte-Carlo photon shot noise reference: the variance of the demodulated,
// mode-weighted record with the atom-light coupling disabled (the simulation
// equivalent of tuning the oscillator out of the lock-in band).
inline double shot_noise_reference(const PulseSchedule& sch, const ModeFunction& mode,
                                   int n_traj, std::uint64_t base_seed) {
    detail::Tables tb(sch);
    const double r_sigma = std::sqrt(tb.phi_peak / 4.0 * tb.dt);
    const double tau = sch.cycles_a * sch.period();
    std::vector<double> w(sch.cycles_a);
    for (int k = 0; k < sch.cycles_a; ++k) w[k] = mode.weight((k + 0.5) * sch.period(), tau);
    double sum = 0.0, sum2 = 0.0;
    const int lit = static_cast<int>(tb.cos_mid.size());
    for (int t = 0; t < n_traj; ++t) {
        rng::TrajectoryRng rng(base_seed, static_cast<std::uint64_t>(t));
        double q = 0.0;
        for (int k = 0; k < sch.cycles_a; ++k) {
            double yc = 0.0;
            for (int i = 0; i < lit; ++i) yc += rng.gaussian(r_sigma) * tb.cos_mid[i];
            q += w[k] * yc;
        }
        sum += q;
        sum2 += q * q;
    }
    const double n = static_cast<double>(n_traj);
    return (sum2 - sum * sum / n) / (n - 1.0);
}

} // namespace strobe::sim
