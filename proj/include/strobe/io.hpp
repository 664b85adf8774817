#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "strobe/common.hpp"
#include "strobe/estimation.hpp"
#include "strobe/physics.hpp"
#include "strobe/sim.hpp"

// File formats: the physics parameter JSON, the binary per-cycle record dump
// (magic "STRB1") with its JSON sidecar, and the estimation report JSON.

namespace strobe::io {

using nlohmann::json;

struct ParameterSet {
    physics::AtomicTransition transition;
    physics::EnsembleConfig ensemble;
    physics::ProbeConfig probe;
    physics::CavityConfig cavity;
};

// Exact key set of the parameter document.  Frequencies carrying an _hz
// suffix (gamma, deltas, detuning) are ordinary frequencies in Hz and are
// converted to angular frequencies internally; gamma_dark_hz is a decay rate
// in 1/s and t1_s a lifetime in seconds.
inline ParameterSet load_parameters(const json& j) {
    static const char* keys[] = {"gamma_hz", "lambda_m", "delta35_hz", "delta45_hz",
                                 "F", "n_at", "orientation", "gamma_dark_hz", "t1_s",
                                 "detuning_hz", "area_m2", "flux_bar", "duration_s",
                                 "polarization", "t_in", "t_out", "loss", "alpha"};
    for (const char* k : keys)
        if (!j.contains(k))
            throw ConfigError(std::string("parameter file: missing key '") + k + "'");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known)
            throw ConfigError("parameter file: unknown key '" + it.key() + "'");
    }
    ParameterSet p;
    p.transition.gamma = hz_to_rad(j.at("gamma_hz").get<double>());
    p.transition.lambda = j.at("lambda_m").get<double>();
    p.transition.delta_35 = hz_to_rad(j.at("delta35_hz").get<double>());
    p.transition.delta_45 = hz_to_rad(j.at("delta45_hz").get<double>());
    p.transition.f_spin = j.at("F").get<int>();
    p.transition.validate();

    p.ensemble = physics::EnsembleConfig::make(
        j.at("n_at").get<double>(), j.at("orientation").get<double>(), p.transition.f_spin,
        j.at("gamma_dark_hz").get<double>(), j.at("t1_s").get<double>());

    p.probe.detuning = hz_to_rad(j.at("detuning_hz").get<double>());
    p.probe.area = j.at("area_m2").get<double>();
    p.probe.flux_bar = j.at("flux_bar").get<double>();
    p.probe.duration = j.at("duration_s").get<double>();
    const std::string pol = j.at("polarization").get<std::string>();
    if (pol == "x")
        p.probe.polarization_axis = physics::PolarizationAxis::x;
    else if (pol == "y")
        p.probe.polarization_axis = physics::PolarizationAxis::y;
    else
        throw ConfigError("parameter file: polarization must be \"x\" or \"y\"");
    p.probe.validate();

    p.cavity.t_in = j.at("t_in").get<double>();
    p.cavity.t_out = j.at("t_out").get<double>();
    p.cavity.loss = j.at("loss").get<double>();
    p.cavity.alpha = j.at("alpha").get<double>();
    p.cavity.validate();
    return p;
}

inline ParameterSet load_parameters_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("parameter file: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("parameter file '" + path + "': " + e.what());
    }
    return load_parameters(j);
}

// ---------------------------------------------------------------------------
// Binary per-cycle record dump.
// Layout: magic "STRB1" (5 bytes), uint32 version, uint32 reserved,
// uint64 n_traj, uint64 cycles, then little-endian 64-bit floats row-major
// (trajectory x cycle x {Y_cos, Y_sin}).

static_assert(std::endian::native == std::endian::little,
              "record dump assumes a little-endian host");

struct RecordDump {
    std::uint32_t version = 1;
    std::uint64_t n_traj = 0;
    std::uint64_t cycles = 0;
    std::vector<double> data;  // [traj][cycle][{cos, sin}]

    double y_cos(std::uint64_t t, std::uint64_t k) const { return data[(t * cycles + k) * 2]; }
    double y_sin(std::uint64_t t, std::uint64_t k) const { return data[(t * cycles + k) * 2 + 1]; }
};

inline void write_record_dump(const std::string& path, const std::vector<sim::TrajectoryRecord>& records) {
    if (records.empty() || records.front().per_cycle.empty())
        throw ConfigError("write_record_dump: run was made without per-cycle retention");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("write_record_dump: cannot open '" + path + "'");
    const std::uint64_t n_traj = records.size();
    const std::uint64_t cycles = records.front().per_cycle.size() / 2;
    const std::uint32_t version = 1, reserved = 0;
    out.write("STRB1", 5);
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&reserved), sizeof reserved);
    out.write(reinterpret_cast<const char*>(&n_traj), sizeof n_traj);
    out.write(reinterpret_cast<const char*>(&cycles), sizeof cycles);
    for (const auto& rec : records) {
        if (rec.per_cycle.size() != 2 * cycles)
            throw ConfigError("write_record_dump: inconsistent per-cycle lengths");
        out.write(reinterpret_cast<const char*>(rec.per_cycle.data()),
                  static_cast<std::streamsize>(rec.per_cycle.size() * sizeof(double)));
    }
    if (!out) throw ConfigError("write_record_dump: short write to '" + path + "'");
}

inline RecordDump read_record_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("read_record_dump: cannot open '" + path + "'");
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, "STRB1", 5) != 0)
        throw ConfigError("read_record_dump: '" + path + "' is not a STRB1 record dump");
    RecordDump d;
    std::uint32_t reserved = 0;
    in.read(reinterpret_cast<char*>(&d.version), sizeof d.version);
    in.read(reinterpret_cast<char*>(&reserved), sizeof reserved);
    in.read(reinterpret_cast<char*>(&d.n_traj), sizeof d.n_traj);
    in.read(reinterpret_cast<char*>(&d.cycles), sizeof d.cycles);
    if (!in) throw ConfigError("read_record_dump: truncated header in '" + path + "'");
    if (d.n_traj == 0 || d.cycles == 0)
        throw ConfigError("read_record_dump: '" + path + "' contains no records");
    d.data.resize(d.n_traj * d.cycles * 2);
    in.read(reinterpret_cast<char*>(d.data.data()),
            static_cast<std::streamsize>(d.data.size() * sizeof(double)));
    if (!in) throw ConfigError("read_record_dump: truncated payload in '" + path + "'");
    return d;
}

// Sidecar metadata written next to a dump so `report` can rebuild the
// two-pulse estimate: cycle split, mode functions, shot-noise references,
// spin survival and the ground-state reference.
struct DumpMeta {
    std::uint64_t cycles_a = 0;
    std::uint64_t cycles_b = 0;
    double omega = 0.0;
    double mode_rate_a = 0.0;
    double mode_rate_b = 0.0;
    std::string mode_kind_a = "exp_rising";
    std::string mode_kind_b = "exp_falling";
    double psn_a = 0.0;
    double psn_b = 0.0;
    double f_d = 1.0;
    double ground_ref = 0.0;
};

inline std::string meta_path_for(const std::string& dump_path) {
    return dump_path + ".meta.json";
}

inline void write_dump_meta(const std::string& dump_path, const DumpMeta& m) {
    json j{{"cycles_a", m.cycles_a}, {"cycles_b", m.cycles_b}, {"omega", m.omega},
           {"mode_rate_a", m.mode_rate_a}, {"mode_rate_b", m.mode_rate_b},
           {"mode_kind_a", m.mode_kind_a}, {"mode_kind_b", m.mode_kind_b},
           {"psn_a", m.psn_a}, {"psn_b", m.psn_b}, {"f_d", m.f_d},
           {"ground_ref", m.ground_ref}};
    std::ofstream out(meta_path_for(dump_path));
    if (!out) throw ConfigError("write_dump_meta: cannot open '" + meta_path_for(dump_path) + "'");
    out << j.dump(2) << "\n";
}

inline DumpMeta read_dump_meta(const std::string& dump_path) {
    std::ifstream in(meta_path_for(dump_path));
    if (!in) throw ConfigError("read_dump_meta: cannot open '" + meta_path_for(dump_path) + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("read_dump_meta: ") + e.what());
    }
    DumpMeta m;
    m.cycles_a = j.at("cycles_a").get<std::uint64_t>();
    m.cycles_b = j.at("cycles_b").get<std::uint64_t>();
    m.omega = j.at("omega").get<double>();
    m.mode_rate_a = j.at("mode_rate_a").get<double>();
    m.mode_rate_b = j.at("mode_rate_b").get<double>();
    m.mode_kind_a = j.value("mode_kind_a", "exp_rising");
    m.mode_kind_b = j.value("mode_kind_b", "exp_falling");
    m.psn_a = j.at("psn_a").get<double>();
    m.psn_b = j.at("psn_b").get<double>();
    m.f_d = j.at("f_d").get<double>();
    m.ground_ref = j.at("ground_ref").get<double>();
    return m;
}

// Estimation report with its confidence interval, fixed key set.
inline json report_to_json(const est::SqueezingReport& r, double f_d, double ci_lo_db,
                           double ci_hi_db) {
    return json{{"var_xm_a", r.var_xm_a},
                {"var_xm_b", r.var_xm_b},
                {"var_xm_b_given_a", r.var_xm_b_given_a},
                {"xi_tilde_sq_db", r.xi_tilde_db},
                {"xi_w_sq_db", r.xi_w_db},
                {"n_bar", r.n_bar},
                {"f_d", f_d},
                {"ci_lo_db", ci_lo_db},
                {"ci_hi_db", ci_hi_db}};
}

} // namespace strobe::io
