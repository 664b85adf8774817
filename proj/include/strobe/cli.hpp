#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "strobe/analytics.hpp"
#include "strobe/common.hpp"
#include "strobe/estimation.hpp"
#include "strobe/harness.hpp"
#include "strobe/io.hpp"
#include "strobe/sim.hpp"

// Command line front end.  Subcommands:
//   analytics  closed-form table for a given duty cycle / coupling
//   simulate   one protocol run from a scenario file
//   sweep      full scenario sweep emitting CSV or JSON-lines tables
//   report     estimation over an existing record dump
// Exit codes: 0 success, 1 configuration error, 2 numerical failure.

namespace strobe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline int run_analytics(double duty, double kappa2, double zeta, double d_eff,
                         double finesse, double loss, const std::string& format) {
    const auto profile = analytics::strobe_profile(duty);
    json out;
    out["duty"] = duty;
    out["sinc_pd"] = profile.sinc_pd;
    out["b_factor"] = profile.b;
    out["ba_coupling_c"] = profile.c;
    out["ground_var_x"] = analytics::ground_state_x_variance(profile);
    out["kappa_tilde_sq"] = kappa2;
    const double xi0 = analytics::conditional_squeezing(std::sqrt(kappa2), profile);
    out["xi0_sq"] = xi0;
    out["xi0_db"] = to_db(xi0);
    if (zeta > 0.0 && d_eff > 0.0) {
        const auto total = analytics::total_squeezing(xi0, zeta, std::sqrt(kappa2), d_eff);
        out["eta_tau"] = total.eta_tau;
        out["xi_sq"] = total.xi_sq;
        out["xi_db"] = to_db(total.xi_sq);
    }
    if (finesse > 0.0 && loss > 0.0 && zeta > 0.0 && d_eff > 0.0) {
        const auto opt = analytics::optimal_cavity_squeezing(zeta, d_eff, finesse, loss);
        out["t2_opt"] = opt.t2_opt;
        out["xi_opt_sq"] = opt.xi_opt_sq;
    }
    if (format == "json") {
        std::cout << out.dump(2) << "\n";
    } else {
        for (auto it = out.begin(); it != out.end(); ++it)
            std::printf("%-16s %.12g\n", it.key().c_str(), it.value().get<double>());
    }
    return 0;
}

inline sim::ModeFunction mode_from_meta(const std::string& kind, double rate) {
    sim::ModeFunction m;
    if (kind == "flat") m.kind = sim::ModeFunction::Kind::flat;
    else if (kind == "exp_rising") m.kind = sim::ModeFunction::Kind::exp_rising;
    else if (kind == "exp_falling") m.kind = sim::ModeFunction::Kind::exp_falling;
    else throw ConfigError("dump meta: unknown mode kind '" + kind + "'");
    m.rate = rate;
    return m;
}

inline int run_simulate(const std::string& config_path, int traj_override,
                        std::int64_t seed_override, const std::string& out_dir,
                        const std::string& dump_path, const std::string& format) {
    harness::ScenarioConfig cfg = harness::load_scenario_file(config_path);
    if (traj_override > 0) cfg.n_traj = traj_override;
    if (seed_override >= 0) cfg.base_seed = static_cast<std::uint64_t>(seed_override);

    const harness::PointSetup p = harness::build_point(cfg.base);
    json out;
    out["name"] = cfg.name;
    out["n_traj"] = cfg.n_traj;
    out["base_seed"] = cfg.base_seed;
    out["duty_effective"] = p.schedule.duty_effective();

    const bool two_pulse = cfg.protocol == harness::Protocol::two_pulse_squeezing;
    const bool want_dump = !dump_path.empty();
    sim::DecoherenceConfig deco = p.deco;
    if (cfg.protocol == harness::Protocol::thermal_calibration) deco.back_action = false;
    const sim::RunResult run =
        two_pulse ? sim::run_two_pulse(p.schedule, p.coupling, deco, p.init, cfg.base.mode_a,
                                       cfg.base.mode_b, cfg.n_traj, cfg.base_seed, 1, want_dump)
                  : sim::run_single_pulse(p.schedule, p.coupling, deco, p.init,
                                          cfg.base.mode_a, cfg.n_traj, cfg.base_seed, 1,
                                          want_dump);
    out["kappa_tilde_sq_a"] = run.kappa_tilde_sq_a;
    out["kappa_tilde_sq_b"] = run.kappa_tilde_sq_b;
    out["psn_a"] = run.psn_a;
    out["psn_b"] = run.psn_b;
    out["f_d"] = run.f_d;
    out["min_det_cov"] = run.min_det;
    out["uncond_var_x_end"] = run.uncond_var_x_end;
    out["uncond_var_p_end"] = run.uncond_var_p_end;

    const auto profile = analytics::strobe_profile(run.duty_effective);
    double ground_ref = 0.0;
    if (two_pulse) {
        ground_ref = run.kappa_tilde_sq_b +
                     profile.c * run.kappa_tilde_sq_b * run.kappa_tilde_sq_b / 3.0;
        const est::RecordEnsemble ens = harness::detail::two_pulse_ensemble(run);
        const est::SqueezingReport rep = est::squeezing_report(ens, ground_ref);
        const est::Metric metric = [psn = ens.psn_b, g = ground_ref,
                                    fd = ens.f_d](const est::RecordEnsemble& r) {
            const auto cv = est::conditional_variance(r.qa, r.qb);
            return to_db(est::oscillator_noise(cv.var_b_given_a, psn) / (fd * fd * g));
        };
        const auto ci = est::bootstrap_ci(metric, ens, cfg.bootstrap_resamples, cfg.base_seed);
        out["report"] = io::report_to_json(rep, ens.f_d, ci.lo, ci.hi);
        // occupancy under both conventions: ratio-1 and (ratio-1)/2
        out["measured_over_ground_b"] = rep.n_bar + 1.0;
        out["n_bar_symmetric"] = rep.n_bar;
        out["n_bar_half"] = rep.n_bar / 2.0;
    } else {
        const est::RecordEnsemble ens = harness::detail::single_pulse_ensemble(run);
        const double noise = est::oscillator_noise(est::detail::variance(ens.qa), ens.psn_a);
        out["var_xm_a"] = noise;
        if (noise < 0.0)
            std::cerr << "warning: oscillator noise below shot noise (miscalibration?)\n";
        const double ground_a = run.kappa_tilde_sq_a +
                                profile.c * run.kappa_tilde_sq_a * run.kappa_tilde_sq_a / 3.0;
        out["measured_over_ground_a"] = noise / ground_a;
        out["n_bar_symmetric"] = noise / ground_a - 1.0;
        out["n_bar_half"] = (noise / ground_a - 1.0) / 2.0;
    }

    if (want_dump) {
        io::write_record_dump(dump_path, run.records);
        io::DumpMeta meta;
        meta.cycles_a = p.schedule.cycles_a;
        meta.cycles_b = p.schedule.cycles_b;
        meta.omega = p.schedule.omega;
        meta.mode_rate_a = cfg.base.mode_a.rate;
        meta.mode_rate_b = cfg.base.mode_b.rate;
        auto kind_name = [](sim::ModeFunction::Kind k) {
            switch (k) {
                case sim::ModeFunction::Kind::flat: return "flat";
                case sim::ModeFunction::Kind::exp_rising: return "exp_rising";
                case sim::ModeFunction::Kind::exp_falling: return "exp_falling";
            }
            return "flat";
        };
        meta.mode_kind_a = kind_name(cfg.base.mode_a.kind);
        meta.mode_kind_b = kind_name(cfg.base.mode_b.kind);
        meta.psn_a = run.psn_a;
        meta.psn_b = run.psn_b;
        meta.f_d = run.f_d;
        meta.ground_ref = ground_ref;
        io::write_dump_meta(dump_path, meta);
        out["dump"] = dump_path;
    }

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const std::string path = out_dir + "/" + cfg.name + "_summary.json";
        std::ofstream f(path);
        if (!f) throw ConfigError("simulate: cannot write '" + path + "'");
        f << out.dump(2) << "\n";
        std::cout << path << "\n";
    } else {
        std::cout << out.dump(2) << "\n";
    }
    (void)format;
    return 0;
}

inline int run_sweep(const std::string& config_path, int traj_override,
                     std::int64_t seed_override, int jobs, const std::string& out_dir,
                     const std::string& format) {
    harness::ScenarioConfig cfg = harness::load_scenario_file(config_path);
    if (traj_override > 0) cfg.n_traj = traj_override;
    if (seed_override >= 0) cfg.base_seed = static_cast<std::uint64_t>(seed_override);
    const std::string dir = out_dir.empty() ? cfg.outputs : out_dir;
    fs::create_directories(dir);
    const bool csv = format != "json";
    const std::string ext = csv ? ".csv" : ".jsonl";

    auto table_path = [&](const std::string& label) {
        return dir + "/" + cfg.name + (label.empty() ? "" : "_" + label) + ext;
    };

    if (jobs <= 1) {
        // incremental, crash-safe append
        std::map<std::string, std::ofstream> streams;
        harness::RowCallback on_row = [&](const std::string& label, std::size_t,
                                          const harness::SweepRow& row) {
            auto it = streams.find(label);
            if (it == streams.end()) {
                it = streams.emplace(label, std::ofstream(table_path(label))).first;
                if (!it->second) throw ConfigError("sweep: cannot write '" + table_path(label) + "'");
                if (csv) it->second << harness::csv_header() << "\n";
            }
            if (csv)
                it->second << harness::csv_row(row) << "\n";
            else
                it->second << harness::row_to_json(row).dump() << "\n";
            it->second.flush();
        };
        harness::run_scenario(cfg, on_row, 1);
        for (auto& [label, stream] : streams) std::cout << table_path(label) << "\n";
    } else {
        // parallel points: per-point part files, merged in order at the end
        harness::RowCallback on_row = [&](const std::string& label, std::size_t index,
                                          const harness::SweepRow& row) {
            const std::string part = table_path(label) + ".part" + std::to_string(index);
            std::ofstream f(part);
            if (csv)
                f << harness::csv_row(row) << "\n";
            else
                f << harness::row_to_json(row).dump() << "\n";
        };
        const auto tables = harness::run_scenario(cfg, on_row, jobs);
        for (const auto& table : tables) {
            std::ofstream f(table_path(table.label));
            if (!f) throw ConfigError("sweep: cannot write '" + table_path(table.label) + "'");
            if (csv) f << harness::csv_header() << "\n";
            for (std::size_t i = 0; i < table.rows.size(); ++i) {
                const std::string part = table_path(table.label) + ".part" + std::to_string(i);
                std::ifstream pf(part);
                f << pf.rdbuf();
                fs::remove(part);
            }
            std::cout << table_path(table.label) << "\n";
        }
    }
    return 0;
}

inline int run_report(const std::string& dump_path, const std::string& out_path,
                      int resamples, std::int64_t seed) {
    const io::RecordDump dump = io::read_record_dump(dump_path);
    const io::DumpMeta meta = io::read_dump_meta(dump_path);
    if (meta.cycles_a + meta.cycles_b != dump.cycles)
        throw ConfigError("report: dump cycle count does not match its sidecar");
    if (meta.cycles_b == 0)
        throw ConfigError("report: dump holds a single-pulse run; need a two-pulse record");

    const double period = two_pi / meta.omega;
    const double tau_a = meta.cycles_a * period;
    const double tau_b = meta.cycles_b * period;
    const sim::ModeFunction mode_a = mode_from_meta(meta.mode_kind_a, meta.mode_rate_a);
    const sim::ModeFunction mode_b = mode_from_meta(meta.mode_kind_b, meta.mode_rate_b);

    est::RecordEnsemble ens;
    ens.psn_a = meta.psn_a;
    ens.psn_b = meta.psn_b;
    ens.f_d = meta.f_d;
    ens.qa.resize(dump.n_traj, 0.0);
    ens.qb.resize(dump.n_traj, 0.0);
    for (std::uint64_t t = 0; t < dump.n_traj; ++t) {
        double qa = 0.0, qb = 0.0;
        for (std::uint64_t k = 0; k < meta.cycles_a; ++k)
            qa += mode_a.weight((k + 0.5) * period, tau_a) * dump.y_cos(t, k);
        for (std::uint64_t k = 0; k < meta.cycles_b; ++k)
            qb += mode_b.weight((k + 0.5) * period, tau_b) * dump.y_cos(t, meta.cycles_a + k);
        ens.qa[t] = qa;
        ens.qb[t] = qb;
    }

    const est::SqueezingReport rep = est::squeezing_report(ens, meta.ground_ref);
    const est::Metric metric = [psn = ens.psn_b, g = meta.ground_ref,
                                fd = ens.f_d](const est::RecordEnsemble& r) {
        const auto cv = est::conditional_variance(r.qa, r.qb);
        return to_db(est::oscillator_noise(cv.var_b_given_a, psn) / (fd * fd * g));
    };
    const auto ci = est::bootstrap_ci(metric, ens, resamples,
                                      seed >= 0 ? static_cast<std::uint64_t>(seed) : 1u);
    const json out = io::report_to_json(rep, ens.f_d, ci.lo, ci.hi);
    if (out_path.empty()) {
        std::cout << out.dump(2) << "\n";
    } else {
        std::ofstream f(out_path);
        if (!f) throw ConfigError("report: cannot write '" + out_path + "'");
        f << out.dump(2) << "\n";
    }
    return 0;
}

// Parses and dispatches; never throws.
inline int run(std::vector<std::string> args) {
    CLI::App app{"stroboscopic QND spin-oscillator simulator and analytics"};
    app.require_subcommand(1);

    auto* an = app.add_subcommand("analytics", "print the closed-form table");
    double duty = 0.15, kappa2 = 3.0, zeta = 0.0, d_eff = 0.0, finesse = 0.0, loss = 0.0;
    std::string format = "text";
    an->add_option("--duty", duty, "strobe duty cycle in (0,1]");
    an->add_option("--kappa2", kappa2, "kappa_tilde^2 readout strength");
    an->add_option("--zeta", zeta, "decoherence prefactor");
    an->add_option("--deff", d_eff, "effective optical depth");
    an->add_option("--finesse", finesse, "cavity finesse");
    an->add_option("--loss", loss, "cavity round-trip loss");
    an->add_option("--format", format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));

    auto* si = app.add_subcommand("simulate", "run one protocol from a scenario file");
    std::string config, out_dir, dump_path;
    int traj = 0, jobs = 1, resamples = 400;
    std::int64_t seed = -1;
    si->add_option("--config", config, "scenario JSON file")->required();
    si->add_option("--traj", traj, "override trajectory count");
    si->add_option("--seed", seed, "override base seed");
    si->add_option("--out", out_dir, "output directory (default: stdout)");
    si->add_option("--dump", dump_path, "write the per-cycle binary record dump here");
    si->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json", "text"}));

    auto* sw = app.add_subcommand("sweep", "run a scenario sweep");
    std::string sw_config, sw_out, sw_format = "csv";
    int sw_traj = 0;
    std::int64_t sw_seed = -1;
    sw->add_option("--config", sw_config, "scenario JSON file")->required();
    sw->add_option("--traj", sw_traj, "override trajectory count");
    sw->add_option("--seed", sw_seed, "override base seed");
    sw->add_option("--jobs", jobs, "parallel sweep points");
    sw->add_option("--out", sw_out, "output directory (default: scenario 'outputs')");
    sw->add_option("--format", sw_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    auto* re = app.add_subcommand("report", "estimate squeezing from a record dump");
    std::string re_dump, re_out;
    std::int64_t re_seed = 1;
    int re_resamples = 400;
    re->add_option("--dump", re_dump, "binary record dump (STRB1)")->required();
    re->add_option("--out", re_out, "report JSON path (default: stdout)");
    re->add_option("--resamples", re_resamples, "bootstrap resamples");
    re->add_option("--seed", re_seed, "bootstrap seed");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints usage / error text
        return e.get_exit_code() == 0 ? 0 : 1;
    }

    try {
        if (an->parsed()) return run_analytics(duty, kappa2, zeta, d_eff, finesse, loss, format);
        if (si->parsed()) return run_simulate(config, traj, seed, out_dir, dump_path, format);
        if (sw->parsed()) return run_sweep(sw_config, sw_traj, sw_seed, jobs, sw_out, sw_format);
        if (re->parsed()) return run_report(re_dump, re_out, re_resamples, re_seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace strobe::cli
