#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "strobe/io.hpp"
#include "strobe/physics.hpp"

using namespace strobe;
using Catch::Approx;

namespace {

physics::ProbeConfig paper_probe() {
    physics::ProbeConfig p;
    p.detuning = hz_to_rad(-1.6e9);
    p.area = 9e-8;
    p.flux_bar = 5.4e11;
    p.duration = 5e-4;
    p.polarization_axis = physics::PolarizationAxis::y;
    return p;
}

} // namespace

TEST_CASE("polarizabilities reach the far-detuned limits (4, 1, 0)") {
    const auto t = physics::cs_d2();
    const auto p = physics::polarizabilities(t, hz_to_rad(-1e16));
    CHECK(p.a0 == Approx(4.0).margin(1e-5));
    CHECK(p.a1 == Approx(1.0).margin(1e-5));
    CHECK(p.a2 == Approx(0.0).margin(1e-5));
}

TEST_CASE("polarizabilities at the paper detuning give a small tensor ratio") {
    const auto t = physics::cs_d2();
    const auto p = physics::polarizabilities(t, hz_to_rad(-1.6e9));
    // high-precision evaluation of the closed forms at Delta = -2 pi 1.6 GHz
    CHECK(p.a0 == Approx(3.70751679090415).epsilon(1e-12));
    CHECK(p.a1 == Approx(1.08802612833859).epsilon(1e-12));
    CHECK(p.a2 == Approx(0.00727693452616620).epsilon(1e-12));
    const double w = 14.0 * p.a2 / p.a1;
    CHECK(w * w < 1e-2);
    CHECK(w * w == Approx(0.00876747137247386).epsilon(1e-10));
}

TEST_CASE("polarizabilities reject on-resonance evaluation") {
    const auto t = physics::cs_d2();
    CHECK_THROWS_AS(physics::polarizabilities(t, 0.0), PoleError);
    CHECK_THROWS_AS(physics::polarizabilities(t, t.delta_45), PoleError);
    CHECK_THROWS_AS(physics::polarizabilities(t, t.delta_35), PoleError);
    // within the default guard band of 10 linewidths
    CHECK_THROWS_AS(physics::polarizabilities(t, t.delta_45 + 5.0 * t.gamma), PoleError);
    CHECK_NOTHROW(physics::polarizabilities(t, t.delta_45 + 20.0 * t.gamma));
    // custom guard band
    CHECK_NOTHROW(physics::polarizabilities(t, t.delta_45 + 5.0 * t.gamma, t.gamma));
}

TEST_CASE("a2 falls monotonically to zero beyond the last pole") {
    const auto t = physics::cs_d2();
    double previous = std::abs(physics::polarizabilities(t, -hz_to_rad(1.0e9)).a2);
    for (double f = 2.0e9; f < 2.0e12; f *= 1.5) {
        const double a2 = std::abs(physics::polarizabilities(t, -hz_to_rad(f)).a2);
        CHECK(a2 < previous);
        previous = a2;
    }
    CHECK(previous < 1e-5);
}

TEST_CASE("coupling strength scales as sqrt of photon and atom number") {
    const auto t = physics::cs_d2();
    const auto ens = physics::EnsembleConfig::make(1e8, 1.0, t.f_spin);
    auto probe = paper_probe();
    const auto base = physics::coupling_set(t, ens, probe, 0.15);

    SECTION("quadrupling the photon number doubles kappa") {
        auto probe4 = probe;
        probe4.duration *= 4.0;
        const auto c4 = physics::coupling_set(t, ens, probe4, 0.15);
        CHECK(c4.kappa == Approx(2.0 * base.kappa).epsilon(1e-12));
        CHECK(c4.kappa_tilde == Approx(2.0 * base.kappa_tilde).epsilon(1e-12));
    }
    SECTION("kappa^2 is linear in atom number") {
        const auto ens3 = physics::EnsembleConfig::make(3e8, 1.0, t.f_spin);
        const auto c3 = physics::coupling_set(t, ens3, probe, 0.15);
        CHECK(c3.kappa * c3.kappa == Approx(3.0 * base.kappa * base.kappa).epsilon(1e-12));
    }
    SECTION("kappa_tilde approaches kappa sqrt(2) at vanishing duty") {
        const auto c = physics::coupling_set(t, ens, probe, 1e-9);
        CHECK(c.kappa_tilde == Approx(std::sqrt(2.0) * c.kappa).epsilon(1e-9));
    }
    SECTION("kappa_tilde >= kappa for any duty") {
        for (double d : {0.05, 0.15, 0.5, 1.0}) {
            const auto c = physics::coupling_set(t, ens, probe, d);
            CHECK(c.kappa_tilde >= c.kappa);
        }
    }
}

TEST_CASE("swap rate sign follows the probe polarization") {
    const auto t = physics::cs_d2();
    const auto ens = physics::EnsembleConfig::make(1e8, 1.0, t.f_spin);
    auto probe = paper_probe();
    const auto cy = physics::coupling_set(t, ens, probe, 0.15);
    probe.polarization_axis = physics::PolarizationAxis::x;
    const auto cx = physics::coupling_set(t, ens, probe, 0.15);
    CHECK(cy.gamma_sw == Approx(-cx.gamma_sw).epsilon(1e-12));
    CHECK(cy.gamma_sw > 0.0);  // y-polarized probe, w > 0 at blue detuning
}

TEST_CASE("swap rate vanishes where the tensor polarizability crosses zero") {
    const auto t = physics::cs_d2();
    // a2 changes sign red of the F'=3 pole: bracket and bisect
    double lo = t.delta_35 * 1.15, hi = t.delta_35 * 1.90;
    auto a2_at = [&](double d) { return physics::polarizabilities(t, d, 0.0).a2; };
    REQUIRE(a2_at(lo) * a2_at(hi) < 0.0);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (a2_at(lo) * a2_at(mid) <= 0.0 ? hi : lo) = mid;
    }
    const double root = 0.5 * (lo + hi);
    const auto ens = physics::EnsembleConfig::make(1e8, 1.0, t.f_spin);
    auto probe = paper_probe();
    probe.detuning = root;
    const auto c = physics::coupling_set(t, ens, probe, 0.15);
    CHECK(std::abs(c.gamma_sw) < std::abs(c.beta * c.beta * ens.n_at * probe.flux_bar) * 1e-9);
}

TEST_CASE("cavity enhancement") {
    const auto t = physics::cs_d2();
    const auto ens = physics::EnsembleConfig::make(1e8, 1.0, t.f_spin);
    const auto base = physics::coupling_set(t, ens, paper_probe(), 0.15);

    SECTION("finesse pi/2 is the identity point of the gain factor") {
        CHECK(physics::cavity_gain(pi / 2.0) == 1.0);
    }
    SECTION("finesse 17 multiplies kappa by 34/pi") {
        physics::CavityConfig cav{0.003, 0.20, two_pi / 17.0 - 0.203, 0.0};
        CHECK(cav.finesse() == Approx(17.0).epsilon(1e-9));
        const auto enhanced = physics::cavity_enhance(base, cav);
        CHECK(enhanced.kappa / base.kappa == Approx(10.8225361302489).epsilon(1e-10));
        CHECK(enhanced.kappa_tilde / base.kappa_tilde == Approx(10.8225361302489).epsilon(1e-10));
        CHECK(enhanced.beta == base.beta);
        CHECK(enhanced.gamma_sw == base.gamma_sw);
    }
    SECTION("enhancement is linear and maps zero to zero") {
        physics::CavityConfig cav{0.01, 0.20, 0.10, 0.0};
        auto scaled = base;
        scaled.kappa *= 3.0;
        scaled.kappa_tilde *= 3.0;
        const auto e1 = physics::cavity_enhance(base, cav);
        const auto e3 = physics::cavity_enhance(scaled, cav);
        CHECK(e3.kappa == Approx(3.0 * e1.kappa).epsilon(1e-12));
        auto zero = base;
        zero.kappa = zero.kappa_tilde = 0.0;
        const auto e0 = physics::cavity_enhance(zero, cav);
        CHECK(e0.kappa == 0.0);
    }
    SECTION("high-finesse formula invariant") {
        physics::CavityConfig cav{0.003, 0.20, 0.1666, 0.0};
        CHECK(cav.finesse() == Approx(two_pi / (0.003 + 0.20 + 0.1666)).epsilon(1e-12));
    }
}

TEST_CASE("parameter JSON loads with the exact key set") {
    const char* doc = R"({
        "gamma_hz": 5.2227e6, "lambda_m": 852.34727582e-9,
        "delta35_hz": 452.3787e6, "delta45_hz": 251.0916e6, "F": 4,
        "n_at": 1.0e8, "orientation": 0.995, "gamma_dark_hz": 100.0, "t1_s": 0.017,
        "detuning_hz": -1.6e9, "area_m2": 9e-8, "flux_bar": 5.4e11,
        "duration_s": 5e-4, "polarization": "y",
        "t_in": 0.003, "t_out": 0.20, "loss": 0.1666, "alpha": 0.0
    })";
    const auto j = nlohmann::json::parse(doc);
    const auto p = io::load_parameters(j);
    CHECK(p.transition.gamma == Approx(hz_to_rad(5.2227e6)));
    CHECK(p.transition.f_spin == 4);
    CHECK(p.ensemble.jx == Approx(0.995 * 4e8));
    CHECK(p.probe.detuning == Approx(hz_to_rad(-1.6e9)));
    CHECK(p.probe.polarization_axis == physics::PolarizationAxis::y);
    CHECK(p.cavity.finesse() == Approx(two_pi / 0.3696).epsilon(1e-9));

    SECTION("missing key is rejected with its name") {
        auto bad = j;
        bad.erase("flux_bar");
        try {
            io::load_parameters(bad);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("flux_bar") != std::string::npos);
        }
    }
    SECTION("unknown key is rejected with its name") {
        auto bad = j;
        bad["fluxbar"] = 1.0;
        try {
            io::load_parameters(bad);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("fluxbar") != std::string::npos);
        }
    }
    SECTION("invalid polarization is rejected") {
        auto bad = j;
        bad["polarization"] = "z";
        CHECK_THROWS_AS(io::load_parameters(bad), ConfigError);
    }
}

TEST_CASE("ensemble and probe invariants are enforced") {
    const auto t = physics::cs_d2();
    CHECK_THROWS_AS(physics::EnsembleConfig::make(1e8, 1.2, t.f_spin), ConfigError);
    CHECK_THROWS_AS(physics::EnsembleConfig::make(1e8, -0.1, t.f_spin), ConfigError);
    auto probe = paper_probe();
    probe.area = 0.0;
    CHECK_THROWS_AS(physics::coupling_set(t, physics::EnsembleConfig::make(1e8, 1.0, 4),
                                          probe, 0.15),
                    ConfigError);
    probe = paper_probe();
    CHECK_THROWS_AS(physics::coupling_set(t, physics::EnsembleConfig::make(1e8, 1.0, 4),
                                          probe, 0.0),
                    DomainError);
}
