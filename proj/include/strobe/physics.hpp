#pragma once

#include <cmath>
#include <string>

#include "strobe/common.hpp"

// Atom-light-cavity coupling constants from physical inputs: the Cs D2
// polarizabilities, the Faraday coupling beta, the readout strengths kappa
// and kappa_tilde, the tensor ratio w and the swap rate gamma_sw, and the
// cavity finesse enhancement.  All angular frequencies are rad/s; hbar = c = 1.

namespace strobe::physics {

enum class PolarizationAxis { x, y };

struct AtomicTransition {
    double gamma;     // natural linewidth (rad/s)
    double lambda;    // transition wavelength (m)
    double delta_35;  // F'=3 to F'=5 excited-state splitting (rad/s)
    double delta_45;  // F'=4 to F'=5 excited-state splitting (rad/s)
    int f_spin;       // total ground-state spin (4 for Cs)

    void validate() const {
        if (!(gamma > 0.0) || !(lambda > 0.0))
            throw ConfigError("AtomicTransition: gamma and lambda must be positive");
        if (!(delta_45 > 0.0) || !(delta_35 > delta_45))
            throw ConfigError("AtomicTransition: require delta_35 > delta_45 > 0");
        if (f_spin < 1) throw ConfigError("AtomicTransition: f_spin must be >= 1");
    }
};

// Cs D2 line (6S1/2 F=4 -> 6P3/2) from standard published data.  The
// splittings are the F'=3/F'=4 to F'=5 spacings of the excited manifold.
inline AtomicTransition cs_d2() {
    AtomicTransition t;
    t.gamma = hz_to_rad(5.2227e6);
    t.lambda = 852.34727582e-9;
    t.delta_35 = hz_to_rad(452.3787e6);
    t.delta_45 = hz_to_rad(251.0916e6);
    t.f_spin = 4;
    return t;
}

struct EnsembleConfig {
    double n_at;         // atom count
    double orientation;  // spin orientation p in [0,1]
    double jx;           // macroscopic spin J_x = p * n_at * F  (hbar = 1)
    double gamma_dark;   // dark transverse decay rate (1/s)
    double t1;           // longitudinal lifetime (s)

    static EnsembleConfig make(double n_at, double orientation, int f_spin,
                               double gamma_dark = 0.0, double t1 = 0.0) {
        EnsembleConfig e{n_at, orientation, orientation * n_at * f_spin, gamma_dark, t1};
        e.validate(f_spin);
        return e;
    }

    void validate(int f_spin) const {
        if (orientation < 0.0 || orientation > 1.0)
            throw ConfigError("EnsembleConfig: orientation must be in [0,1]");
        if (jx > n_at * f_spin * (1.0 + 1e-12))
            throw ConfigError("EnsembleConfig: jx exceeds n_at * F");
        if (gamma_dark < 0.0)
            throw ConfigError("EnsembleConfig: gamma_dark must be >= 0");
    }
};

struct ProbeConfig {
    double detuning;   // rad/s, negative = blue detuning
    double area;       // interaction cross-section (m^2)
    double flux_bar;   // period-averaged photon flux (photons/s)
    double duration;   // pulse length (s)
    PolarizationAxis polarization_axis = PolarizationAxis::y;

    double n_ph() const { return flux_bar * duration; }

    void validate() const {
        if (detuning == 0.0) throw ConfigError("ProbeConfig: detuning must be nonzero");
        if (!(area > 0.0)) throw ConfigError("ProbeConfig: area must be positive");
        if (flux_bar < 0.0) throw ConfigError("ProbeConfig: flux_bar must be >= 0");
        if (!(duration > 0.0)) throw ConfigError("ProbeConfig: duration must be positive");
    }
};

struct Polarizabilities {
    double a0, a1, a2;
};

// Scalar, vector and second-rank tensor polarizabilities of the Cs D2
// F=4 manifold.  detuning is measured from the F=4 -> F'=5 transition and is
// negative for blue detuning; poles sit at 0, delta_45 and delta_35.
// guard_band (rad/s) rejects evaluation within that distance of a pole;
// it defaults to 10 natural linewidths, where the far-detuned low-saturation
// Hamiltonian no longer applies.
inline Polarizabilities polarizabilities(const AtomicTransition& t, double detuning,
                                         double guard_band = -1.0) {
    t.validate();
    if (guard_band < 0.0) guard_band = 10.0 * t.gamma;
    for (double pole : {0.0, t.delta_45, t.delta_35}) {
        if (std::abs(detuning - pole) < guard_band)
            throw PoleError("polarizabilities: detuning within guard band of pole at " +
                            std::to_string(rad_to_hz(pole)) + " Hz");
    }
    const double r35 = 1.0 / (1.0 - t.delta_35 / detuning);
    const double r45 = 1.0 / (1.0 - t.delta_45 / detuning);
    Polarizabilities p;
    p.a0 = (r35 + 7.0 * r45 + 8.0) / 4.0;
    p.a1 = (-35.0 * r35 - 21.0 * r45 + 176.0) / 120.0;
    p.a2 = (5.0 * r35 - 21.0 * r45 + 16.0) / 240.0;
    return p;
}

struct CouplingSet {
    double a0, a1, a2;   // polarizabilities (dimensionless)
    double beta;         // Faraday coupling, dimensionless per sqrt(spin * photon)
    double kappa;        // readout strength, kappa^2 = (1/4) beta^2 J_x N_ph
    double kappa_tilde;  // strobe-modified strength, kappa_tilde = kappa sqrt(B)
    double w;            // tensor ratio 14 a2 / a1
    double gamma_sw;     // swap rate (1/s), sign set by the probe polarization
};

// All coupling constants for a probe pulse with stroboscopic duty cycle.
//   beta         = -(Gamma / 8 A Delta) (lambda^2 / 2 pi) a1
//   kappa^2      = (1/4) beta^2 J_x flux_bar duration
//   kappa_tilde^2 = kappa^2 [1 + sinc(pi D)]
//   gamma_sw     = -sign(S_x) w beta^2 N_at flux_bar
// An x-polarized probe has S_x > 0, a y-polarized one S_x < 0.
inline CouplingSet coupling_set(const AtomicTransition& t, const EnsembleConfig& e,
                                const ProbeConfig& probe, double duty) {
    probe.validate();
    e.validate(t.f_spin);
    if (!(duty > 0.0) || duty > 1.0)
        throw DomainError("coupling_set: duty must be in (0,1]");

    const Polarizabilities pol = polarizabilities(t, probe.detuning);
    CouplingSet c;
    c.a0 = pol.a0;
    c.a1 = pol.a1;
    c.a2 = pol.a2;
    c.beta = -(t.gamma / (8.0 * probe.area * probe.detuning)) *
             (t.lambda * t.lambda / two_pi) * pol.a1;
    const double kappa_sq = 0.25 * c.beta * c.beta * e.jx * probe.n_ph();
    const double b = 1.0 + detail::sinc(pi * duty);
    c.kappa = std::sqrt(kappa_sq);
    c.kappa_tilde = std::sqrt(kappa_sq * b);
    c.w = 14.0 * pol.a2 / pol.a1;
    const double sx_sign = probe.polarization_axis == PolarizationAxis::x ? 1.0 : -1.0;
    c.gamma_sw = -sx_sign * c.w * c.beta * c.beta * e.n_at * probe.flux_bar;
    return c;
}

struct CavityConfig {
    double t_in;   // input coupler power transmission
    double t_out;  // output coupler power transmission
    double loss;   // round-trip power loss
    double alpha;  // single-pass atomic absorption

    // High-finesse approximation 2 pi / (T_in + T_out + L).
    double finesse() const { return two_pi / (t_in + t_out + loss); }

    void validate() const {
        for (double v : {t_in, t_out, loss, alpha})
            if (v < 0.0 || v >= 1.0)
                throw ConfigError("CavityConfig: transmissions, loss and alpha must be in [0,1)");
    }
};

// Coupling enhancement factor of a resonant standing-wave cavity.
inline double cavity_gain(double finesse) { return 2.0 * finesse / pi; }

// Scales kappa and kappa_tilde by 2F/pi.  Other fields are left untouched.
inline CouplingSet cavity_enhance(const CouplingSet& c, const CavityConfig& cavity) {
    cavity.validate();
    CouplingSet out = c;
    const double gain = cavity_gain(cavity.finesse());
    out.kappa *= gain;
    out.kappa_tilde *= gain;
    return out;
}

inline bool cavity_low_finesse(const CavityConfig& cavity) { return cavity.finesse() < 5.0; }

} // namespace strobe::physics
