#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "strobe/analytics.hpp"
#include "strobe/common.hpp"
#include "strobe/estimation.hpp"
#include "strobe/io.hpp"
#include "strobe/physics.hpp"
#include "strobe/sim.hpp"

// Scenario configuration and figure-reproduction sweeps: ties physics ->
// analytics -> sim -> estimation into reproducible experiments emitting
// plot-ready CSV / JSON-lines data.

namespace strobe::harness {

using nlohmann::json;

enum class Protocol {
    single_pulse_noise,
    back_action_sweep,
    two_pulse_squeezing,
    thermal_calibration,
};

inline Protocol protocol_from_string(const std::string& s) {
    if (s == "single_pulse_noise") return Protocol::single_pulse_noise;
    if (s == "back_action_sweep") return Protocol::back_action_sweep;
    if (s == "two_pulse_squeezing") return Protocol::two_pulse_squeezing;
    if (s == "thermal_calibration") return Protocol::thermal_calibration;
    throw ConfigError("unknown protocol '" + s + "'");
}

// Everything one sweep point needs.  Coupling comes either from a physics
// parameter set (paper units) or from an effective kappa_tilde^2 target.
struct ScenarioBase {
    bool physical = false;
    std::optional<io::ParameterSet> params;
    bool use_cavity = false;

    double kappa_tilde_sq = 3.0;  // effective mode, pulse A target
    double n_at = 1e8;
    double orientation = 1.0;
    int f_spin = 4;

    double omega = two_pi * 380e3;
    int steps_per_period = 256;
    double duty = 0.15;
    int cycles_a = 24;
    int cycles_b = 0;
    int gap_cycles = 0;
    double flux_bar = 1e8;
    bool tensor_enabled = false;

    std::string init = "ground";  // ground | thermal | unpolarized_thermal
    double n_bar_init = 0.0;

    sim::ModeFunction mode_a{sim::ModeFunction::Kind::flat, 0.0};
    sim::ModeFunction mode_b{sim::ModeFunction::Kind::flat, 0.0};
    sim::DecoherenceConfig deco;
    std::vector<double> duties;  // back_action_sweep runs one table per duty
};

struct ScenarioConfig {
    std::string name = "scenario";
    Protocol protocol = Protocol::single_pulse_noise;
    int n_traj = 10000;
    std::uint64_t base_seed = 1;
    std::string outputs = ".";
    std::string sweep_variable;
    std::vector<double> sweep_values;
    int bootstrap_resamples = 400;
    ScenarioBase base;
};

// Fixed output schema.
struct SweepRow {
    double sweep_value = std::numeric_limits<double>::quiet_NaN();
    double analytic_var = std::numeric_limits<double>::quiet_NaN();
    double mc_var = std::numeric_limits<double>::quiet_NaN();
    double mc_ci_lo = std::numeric_limits<double>::quiet_NaN();
    double mc_ci_hi = std::numeric_limits<double>::quiet_NaN();
    double xi_tilde_db = std::numeric_limits<double>::quiet_NaN();
    double xi_w_db = std::numeric_limits<double>::quiet_NaN();
    double runtime_s = 0.0;
};

struct SweepTable {
    std::string label;  // empty for single-table protocols
    std::vector<SweepRow> rows;
};

// ---------------------------------------------------------------------------
// Scenario JSON parsing

inline const std::vector<std::string>& sweepable_keys() {
    static const std::vector<std::string> keys = {
        "kappa_tilde_sq", "n_at", "flux_bar", "n_ph", "cycles_a", "duty",
        "n_bar_init", "zeta_over_deff", "gamma_dark_hz"};
    return keys;
}

inline sim::ModeFunction parse_mode(const json& j) {
    sim::ModeFunction m;
    const std::string kind = j.value("kind", "flat");
    if (kind == "flat")
        m.kind = sim::ModeFunction::Kind::flat;
    else if (kind == "exp_rising")
        m.kind = sim::ModeFunction::Kind::exp_rising;
    else if (kind == "exp_falling")
        m.kind = sim::ModeFunction::Kind::exp_falling;
    else
        throw ConfigError("mode kind must be flat, exp_rising or exp_falling, got '" + kind + "'");
    m.rate = j.value("rate_hz", 0.0);
    return m;
}

inline ScenarioConfig parse_scenario(const json& j, const std::string& config_dir = ".") {
    ScenarioConfig c;
    try {
        c.name = j.value("name", "scenario");
        c.protocol = protocol_from_string(j.at("protocol").get<std::string>());
        c.n_traj = j.value("n_traj", 10000);
        if (c.n_traj < 100) throw ConfigError("n_traj must be >= 100");
        c.base_seed = j.value("base_seed", static_cast<std::uint64_t>(1));
        c.outputs = j.value("outputs", std::string("."));
        c.bootstrap_resamples = j.value("bootstrap_resamples", 400);

        if (j.contains("sweep")) {
            const json& sw = j.at("sweep");
            c.sweep_variable = sw.at("variable").get<std::string>();
            bool known = false;
            for (const auto& k : sweepable_keys()) known = known || k == c.sweep_variable;
            if (!known)
                throw ConfigError("sweep variable '" + c.sweep_variable +
                                  "' is not a recognized config key");
            if (sw.contains("values")) {
                c.sweep_values = sw.at("values").get<std::vector<double>>();
            } else if (sw.contains("log_range")) {
                const json& lr = sw.at("log_range");
                const double from = lr.at("from").get<double>();
                const double to = lr.at("to").get<double>();
                const int n = lr.at("n").get<int>();
                if (!(from > 0.0) || !(to > 0.0) || n < 2)
                    throw ConfigError("sweep log_range needs positive from/to and n >= 2");
                for (int i = 0; i < n; ++i)
                    c.sweep_values.push_back(
                        from * std::pow(to / from, static_cast<double>(i) / (n - 1)));
            } else {
                throw ConfigError("sweep needs 'values' or 'log_range'");
            }
            if (c.sweep_values.empty()) throw ConfigError("sweep has no values");
        }

        const json& b = j.value("base", json::object());
        ScenarioBase& s = c.base;
        if (b.contains("params_file")) {
            std::string path = b.at("params_file").get<std::string>();
            if (!path.empty() && path.front() != '/') path = config_dir + "/" + path;
            s.params = io::load_parameters_file(path);
            s.physical = true;
        } else if (b.contains("physics")) {
            s.params = io::load_parameters(b.at("physics"));
            s.physical = true;
        } else if (const char* env = std::getenv("STRB_DEFAULT_PARAMS");
                   env != nullptr && b.value("use_default_params", false)) {
            s.params = io::load_parameters_file(env);
            s.physical = true;
        }
        s.use_cavity = b.value("cavity_enhance", false);
        s.kappa_tilde_sq = b.value("kappa_tilde_sq", 3.0);
        s.n_at = b.value("n_at", s.physical ? s.params->ensemble.n_at : 1e8);
        s.orientation = b.value("orientation", s.physical ? s.params->ensemble.orientation : 1.0);
        s.f_spin = s.physical ? s.params->transition.f_spin : b.value("F", 4);
        s.omega = hz_to_rad(b.value("omega_hz", 380e3));
        s.steps_per_period = b.value("steps_per_period", 256);
        s.duty = b.value("duty", 0.15);
        s.cycles_a = b.value("cycles_a", 24);
        s.cycles_b = b.value("cycles_b", 0);
        s.gap_cycles = b.value("gap_cycles", 0);
        s.flux_bar = b.value("flux_bar", s.physical ? s.params->probe.flux_bar : 1e8);
        s.tensor_enabled = b.value("tensor_enabled", false);
        s.init = b.value("init", "ground");
        if (s.init != "ground" && s.init != "thermal" && s.init != "unpolarized_thermal")
            throw ConfigError("init must be ground, thermal or unpolarized_thermal");
        s.n_bar_init = b.value("n_bar_init", 0.0);
        if (b.contains("mode_a")) s.mode_a = parse_mode(b.at("mode_a"));
        if (b.contains("mode_b")) s.mode_b = parse_mode(b.at("mode_b"));
        s.deco.gamma_dark = b.value("gamma_dark_hz", 0.0);
        s.deco.n_bar_bath = b.value("n_bar_bath", 0.0);
        s.deco.gamma_depump = b.value("gamma_depump_hz", 0.0);
        s.deco.zeta_over_deff = b.value("zeta", 0.0) > 0.0 && b.value("d_eff", 0.0) > 0.0
                                    ? b.at("zeta").get<double>() / b.at("d_eff").get<double>()
                                    : b.value("zeta_over_deff", 0.0);
        s.deco.back_action = b.value("back_action", true);
        s.deco.probe_noise_pulse_a = b.value("probe_noise_pulse_a", true);
        s.deco.probe_noise_pulse_b = b.value("probe_noise_pulse_b", true);
        if (b.contains("duties")) s.duties = b.at("duties").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario config: ") + e.what());
    }
    return c;
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("scenario file: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("scenario file '" + path + "': " + e.what());
    }
    const auto slash = path.find_last_of('/');
    const std::string dir = slash == std::string::npos ? "." : path.substr(0, slash);
    return parse_scenario(j, dir);
}

// ---------------------------------------------------------------------------
// Point assembly

inline void apply_sweep(ScenarioBase& s, const std::string& variable, double value) {
    if (variable.empty()) return;
    if (variable == "kappa_tilde_sq") s.kappa_tilde_sq = value;
    else if (variable == "n_at") s.n_at = value;
    else if (variable == "flux_bar") s.flux_bar = value;
    else if (variable == "n_ph") s.flux_bar = value;  // resolved against tau_a below
    else if (variable == "cycles_a") s.cycles_a = static_cast<int>(std::lround(value));
    else if (variable == "duty") s.duty = value;
    else if (variable == "n_bar_init") s.n_bar_init = value;
    else if (variable == "zeta_over_deff") s.deco.zeta_over_deff = value;
    else if (variable == "gamma_dark_hz") s.deco.gamma_dark = value;
    else throw ConfigError("sweep variable '" + variable + "' is not a recognized config key");
}

struct PointSetup {
    sim::PulseSchedule schedule;
    sim::ProbeCoupling coupling;
    sim::DecoherenceConfig deco;
    sim::OscillatorState init;
    double v_in_zp = 1.0;  // initial quadrature variance in zero-point units
};

// Builds the schedule, coupling and initial state for one sweep point.
// anchor_beta pins the Faraday coupling across sweeps of atom number or
// photon number in effective mode; pass a negative value to derive beta from
// the point's own kappa_tilde_sq target.
inline PointSetup build_point(const ScenarioBase& s, double anchor_beta = -1.0) {
    PointSetup p;
    p.schedule.omega = s.omega;
    p.schedule.steps_per_period = s.steps_per_period;
    p.schedule.duty = s.duty;
    p.schedule.cycles_a = s.cycles_a;
    p.schedule.cycles_b = s.cycles_b;
    p.schedule.gap_cycles = s.gap_cycles;
    p.schedule.flux_bar = s.flux_bar;
    p.schedule.tensor_enabled = s.tensor_enabled;
    p.schedule.validate();
    p.deco = s.deco;

    physics::EnsembleConfig ens = physics::EnsembleConfig::make(
        s.n_at, s.orientation, s.f_spin, s.deco.gamma_dark, 0.0);
    if (s.physical) {
        io::ParameterSet ps = *s.params;
        ps.ensemble = physics::EnsembleConfig::make(s.n_at, s.orientation, s.f_spin,
                                                    ps.ensemble.gamma_dark, ps.ensemble.t1);
        ps.probe.flux_bar = s.flux_bar;
        ps.probe.duration = p.schedule.tau_a();
        const physics::CouplingSet cs =
            physics::coupling_set(ps.transition, ps.ensemble, ps.probe, p.schedule.duty_effective());
        p.coupling = sim::coupling_from_physics(cs, ps.probe.polarization_axis);
        if (s.use_cavity) {
            const physics::CouplingSet enhanced = physics::cavity_enhance(cs, ps.cavity);
            if (physics::cavity_low_finesse(ps.cavity))
                std::cerr << "warning: cavity finesse " << ps.cavity.finesse()
                          << " < 5, enhancement formula marginal\n";
            p.coupling.beta *= enhanced.kappa / cs.kappa;
        }
        ens = ps.ensemble;
    } else {
        p.coupling.pol_sign = -1.0;
        if (anchor_beta > 0.0) {
            p.coupling.beta = anchor_beta;
        } else {
            p.coupling.beta = sim::beta_for_kappa_tilde_sq(
                s.kappa_tilde_sq, ens.jx, s.flux_bar, p.schedule.tau_a(),
                p.schedule.duty_effective());
        }
    }

    sim::InitKind kind = sim::InitKind::ground;
    if (s.init == "thermal") kind = sim::InitKind::thermal;
    if (s.init == "unpolarized_thermal") kind = sim::InitKind::unpolarized_thermal;
    p.init = sim::init_state(kind, s.n_bar_init, ens, s.f_spin);
    p.v_in_zp = p.init.sxx / 0.5;
    return p;
}

// ---------------------------------------------------------------------------
// Protocol execution

namespace detail {

inline est::RecordEnsemble single_pulse_ensemble(const sim::RunResult& run) {
    est::RecordEnsemble e;
    e.qa.reserve(run.records.size());
    for (const auto& r : run.records) e.qa.push_back(r.q_a);
    e.qb = e.qa;
    e.psn_a = run.psn_a;
    e.psn_b = run.psn_a;
    e.f_d = run.f_d;
    return e;
}

inline est::RecordEnsemble two_pulse_ensemble(const sim::RunResult& run) {
    est::RecordEnsemble e;
    e.qa.reserve(run.records.size());
    e.qb.reserve(run.records.size());
    for (const auto& r : run.records) {
        e.qa.push_back(r.q_a);
        e.qb.push_back(r.q_b);
    }
    e.psn_a = run.psn_a;
    e.psn_b = run.psn_b;
    e.f_d = run.f_d;
    return e;
}

} // namespace detail

// Single-pulse oscillator noise in PSN units, MC against the closed form.
inline SweepRow run_single_pulse_point(const ScenarioBase& s, int n_traj,
                                       std::uint64_t seed, int resamples,
                                       double anchor_beta = -1.0) {
    const auto t0 = std::chrono::steady_clock::now();
    PointSetup p = build_point(s, anchor_beta);
    const sim::RunResult run = sim::run_single_pulse(p.schedule, p.coupling, p.deco, p.init,
                                                     s.mode_a, n_traj, seed);
    const auto profile = analytics::strobe_profile(run.duty_effective);
    const double kt2 = run.kappa_tilde_sq_a;
    const double gamma_total = p.deco.gamma_dark;
    const double f_cal = analytics::thermal_calibration_factor(
        gamma_total, s.mode_a.kind == sim::ModeFunction::Kind::exp_rising ? -s.mode_a.rate
                                                                          : s.mode_a.rate,
        p.schedule.tau_a());

    SweepRow row;
    row.analytic_var = kt2 * p.v_in_zp * f_cal + profile.c * kt2 * kt2 / 3.0;
    est::RecordEnsemble ens = detail::single_pulse_ensemble(run);
    row.mc_var = est::oscillator_noise(est::detail::variance(ens.qa), ens.psn_a);
    const est::Metric metric = [psn = ens.psn_a](const est::RecordEnsemble& r) {
        return est::oscillator_noise(est::detail::variance(r.qa), psn);
    };
    const auto ci = est::bootstrap_ci(metric, ens, resamples, seed);
    row.mc_ci_lo = ci.lo;
    row.mc_ci_hi = ci.hi;
    row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

// Two-pulse squeezing point: conditional B-pulse noise plus the squeezing
// metrics; the analytic column is the closed-form conditional noise.
inline SweepRow run_two_pulse_point(const ScenarioBase& s, int n_traj, std::uint64_t seed,
                                    int resamples, double anchor_beta = -1.0,
                                    est::SqueezingReport* report_out = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    PointSetup p = build_point(s, anchor_beta);
    if (p.schedule.cycles_b < 1)
        throw ConfigError("two_pulse_squeezing: cycles_b must be >= 1");
    const sim::RunResult run = sim::run_two_pulse(p.schedule, p.coupling, p.deco, p.init,
                                                  s.mode_a, s.mode_b, n_traj, seed);
    const auto profile = analytics::strobe_profile(run.duty_effective);
    const double kt2_a = run.kappa_tilde_sq_a;
    const double kt2_b = run.kappa_tilde_sq_b;
    const double kt2_b_decayed = kt2_b * run.f_d;

    // ground-state reference for the B pulse with undecayed spin
    const double ground_ref = kt2_b + profile.c * kt2_b * kt2_b / 3.0;

    const double eta_a = p.deco.probe_noise_pulse_a ? p.deco.zeta_over_deff * kt2_a : 0.0;
    const double xi_state = analytics::conditional_squeezing_by_covariances(
                                std::sqrt(kt2_a), profile, p.v_in_zp) +
                            eta_a;

    SweepRow row;
    row.analytic_var = kt2_b_decayed * xi_state +
                       profile.c * kt2_b_decayed * kt2_b_decayed / 3.0;

    est::RecordEnsemble ens = detail::two_pulse_ensemble(run);
    const est::SqueezingReport rep = est::squeezing_report(ens, ground_ref);
    if (report_out) *report_out = rep;
    row.mc_var = rep.var_xm_b_given_a;
    row.xi_tilde_db = rep.xi_tilde_db;
    row.xi_w_db = rep.xi_w_db;
    const est::Metric metric = [psn = ens.psn_b](const est::RecordEnsemble& r) {
        const auto cv = est::conditional_variance(r.qa, r.qb);
        return est::oscillator_noise(cv.var_b_given_a, psn);
    };
    const auto ci = est::bootstrap_ci(metric, ens, resamples, seed);
    row.mc_ci_lo = ci.lo;
    row.mc_ci_hi = ci.hi;
    row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

// Thermal calibration point: decaying thermal oscillator, back-action off,
// record variance against the two-rate calibration factor.
inline SweepRow run_thermal_point(const ScenarioBase& s, int n_traj, std::uint64_t seed,
                                  int resamples) {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioBase cfg = s;
    cfg.deco.back_action = false;
    PointSetup p = build_point(cfg);
    const sim::RunResult run = sim::run_single_pulse(p.schedule, p.coupling, p.deco, p.init,
                                                     cfg.mode_a, n_traj, seed);
    const double gamma_m = cfg.mode_a.kind == sim::ModeFunction::Kind::exp_rising
                               ? -cfg.mode_a.rate
                               : cfg.mode_a.rate;
    const double f_cal = analytics::thermal_calibration_factor(p.deco.gamma_dark, gamma_m,
                                                               p.schedule.tau_a());
    SweepRow row;
    row.analytic_var = run.kappa_tilde_sq_a * p.v_in_zp * f_cal;
    est::RecordEnsemble ens = detail::single_pulse_ensemble(run);
    row.mc_var = est::oscillator_noise(est::detail::variance(ens.qa), ens.psn_a);
    const est::Metric metric = [psn = ens.psn_a](const est::RecordEnsemble& r) {
        return est::oscillator_noise(est::detail::variance(r.qa), psn);
    };
    const auto ci = est::bootstrap_ci(metric, ens, resamples, seed);
    row.mc_ci_lo = ci.lo;
    row.mc_ci_hi = ci.hi;
    row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

// ---------------------------------------------------------------------------
// Sweep driver

using RowCallback = std::function<void(const std::string& label, std::size_t index,
                                       const SweepRow& row)>;

inline std::vector<SweepTable> run_scenario(const ScenarioConfig& cfg,
                                            const RowCallback& on_row = {},
                                            int jobs = 1) {
    std::vector<double> values = cfg.sweep_values;
    if (values.empty()) values.push_back(std::numeric_limits<double>::quiet_NaN());

    // beta anchored at the unswept base for atom/photon-number sweeps
    double anchor_beta = -1.0;
    if (!cfg.base.physical && cfg.sweep_variable != "kappa_tilde_sq" && !cfg.sweep_variable.empty()) {
        anchor_beta = build_point(cfg.base).coupling.beta;
    }

    std::vector<SweepTable> tables;
    if (cfg.protocol == Protocol::back_action_sweep) {
        std::vector<double> duties = cfg.base.duties;
        if (duties.empty()) duties = {1.0, cfg.base.duty};
        for (double d : duties) {
            char label[32];
            std::snprintf(label, sizeof label, "duty%.4g", d);
            tables.push_back({label, std::vector<SweepRow>(values.size())});
        }
    } else {
        tables.push_back({"", std::vector<SweepRow>(values.size())});
    }

    std::vector<double> table_duties;
    if (cfg.protocol == Protocol::back_action_sweep) {
        table_duties = cfg.base.duties;
        if (table_duties.empty()) table_duties = {1.0, cfg.base.duty};
    }

    auto run_point = [&](std::size_t table_idx, std::size_t i) {
        const double v = values[i];
        ScenarioBase s = cfg.base;
        if (!cfg.sweep_variable.empty()) {
            double value = v;
            if (cfg.sweep_variable == "n_ph")  // photons in pulse A -> flux
                value = v / (cfg.base.cycles_a * (two_pi / s.omega));
            apply_sweep(s, cfg.sweep_variable, value);
        }
        const std::uint64_t seed =
            rng::splitmix64(cfg.base_seed ^ rng::splitmix64(0xA5EED + i + 7919 * table_idx));
        SweepRow row;
        try {
            switch (cfg.protocol) {
                case Protocol::single_pulse_noise:
                    row = run_single_pulse_point(s, cfg.n_traj, seed, cfg.bootstrap_resamples,
                                                 anchor_beta);
                    break;
                case Protocol::back_action_sweep:
                    s.duty = table_duties[table_idx];
                    row = run_single_pulse_point(s, cfg.n_traj, seed, cfg.bootstrap_resamples,
                                                 anchor_beta);
                    break;
                case Protocol::two_pulse_squeezing:
                    row = run_two_pulse_point(s, cfg.n_traj, seed, cfg.bootstrap_resamples,
                                              anchor_beta);
                    break;
                case Protocol::thermal_calibration:
                    row = run_thermal_point(s, cfg.n_traj, seed, cfg.bootstrap_resamples);
                    break;
            }
            row.sweep_value = v;
        } catch (const std::exception& e) {
            std::cerr << "sweep point " << i << " (" << tables[table_idx].label
                      << ") failed: " << e.what() << "\n";
            row = SweepRow{};
            row.sweep_value = v;
        }
        tables[table_idx].rows[i] = row;
        if (on_row) on_row(tables[table_idx].label, i, row);
    };

    if (jobs <= 1) {
        for (std::size_t t = 0; t < tables.size(); ++t)
            for (std::size_t i = 0; i < values.size(); ++i) run_point(t, i);
    } else {
        std::vector<std::pair<std::size_t, std::size_t>> work;
        for (std::size_t t = 0; t < tables.size(); ++t)
            for (std::size_t i = 0; i < values.size(); ++i) work.emplace_back(t, i);
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        const std::size_t n_threads =
            std::min(static_cast<std::size_t>(jobs), work.size());
        for (std::size_t w = 0; w < n_threads; ++w)
            pool.emplace_back([&]() {
                for (;;) {
                    const std::size_t k = next.fetch_add(1);
                    if (k >= work.size()) return;
                    run_point(work[k].first, work[k].second);
                }
            });
        for (auto& th : pool) th.join();
    }
    return tables;
}

// ---------------------------------------------------------------------------
// Output writers (CSV and JSON lines).  Values are printed with %.17g so the
// two formats round-trip to identical doubles.

inline const char* csv_header() {
    return "sweep_value,analytic_var,mc_var,mc_ci_lo,mc_ci_hi,xi_tilde_db,xi_w_db,runtime_s";
}

inline std::string format_value(double v) {
    char buf[40];
    if (std::isnan(v)) return "nan";
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_row(const SweepRow& r) {
    std::string out;
    const double vals[] = {r.sweep_value, r.analytic_var, r.mc_var, r.mc_ci_lo,
                           r.mc_ci_hi,    r.xi_tilde_db,  r.xi_w_db, r.runtime_s};
    for (std::size_t i = 0; i < 8; ++i) {
        if (i) out += ',';
        out += format_value(vals[i]);
    }
    return out;
}

inline json row_to_json(const SweepRow& r) {
    auto opt = [](double v) { return std::isnan(v) ? json() : json(v); };
    return json{{"sweep_value", opt(r.sweep_value)}, {"analytic_var", opt(r.analytic_var)},
                {"mc_var", opt(r.mc_var)},           {"mc_ci_lo", opt(r.mc_ci_lo)},
                {"mc_ci_hi", opt(r.mc_ci_hi)},       {"xi_tilde_db", opt(r.xi_tilde_db)},
                {"xi_w_db", opt(r.xi_w_db)},         {"runtime_s", opt(r.runtime_s)}};
}

inline SweepRow row_from_json(const json& j) {
    auto get = [&](const char* k) {
        return j.at(k).is_null() ? std::numeric_limits<double>::quiet_NaN()
                                 : j.at(k).get<double>();
    };
    SweepRow r;
    r.sweep_value = get("sweep_value");
    r.analytic_var = get("analytic_var");
    r.mc_var = get("mc_var");
    r.mc_ci_lo = get("mc_ci_lo");
    r.mc_ci_hi = get("mc_ci_hi");
    r.xi_tilde_db = get("xi_tilde_db");
    r.xi_w_db = get("xi_w_db");
    r.runtime_s = get("runtime_s");
    return r;
}

inline std::vector<SweepRow> read_csv_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("read_csv_rows: cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);  // header
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double v[8];
        int field = 0;
        std::size_t pos = 0;
        while (field < 8) {
            const std::size_t comma = line.find(',', pos);
            const std::string tok = line.substr(pos, comma - pos);
            v[field++] = tok == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                      : std::stod(tok);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]});
    }
    return rows;
}

inline std::vector<SweepRow> read_jsonl_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("read_jsonl_rows: cannot open '" + path + "'");
    std::vector<SweepRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(row_from_json(json::parse(line)));
    }
    return rows;
}

} // namespace strobe::harness
