#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "trapheat/model.hpp"

namespace trapheat {

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unit conversions live here and nowhere else: the interface speaks
// milliseconds, everything internal is seconds.
inline double seconds_from_ms(double ms) { return ms * 1e-3; }
inline double ms_from_seconds(double s) { return s * 1e3; }
inline double per_ms_from_per_s(double rate_per_s) { return rate_per_s * 1e-3; }
inline double rate_from_inverse_ms(double inv_ms) {
    if (!(inv_ms > 0.0)) throw config_error("inverse rate must be > 0 ms");
    return 1.0 / seconds_from_ms(inv_ms);
}

/// Measured presets: stored as inverse rates in ms.
inline double preset_inverse_gamma_ms(const std::string& name) {
    if (name == "axial") return 23.0;
    if (name == "radial") return 830.0;
    throw config_error("unknown preset '" + name + "' (expected axial or radial)");
}

/// Everything a simulation run needs. Each rate may be given directly
/// (1/s) or as an inverse time in ms, but not both.
struct RunConfig {
    int levels = 100;
    std::optional<double> gamma_heat;         // 1/s
    std::optional<double> gamma_heat_inv_ms;  // ms
    std::optional<double> gamma_cool;         // 1/s
    std::optional<double> gamma_cool_inv_ms;  // ms
    double nbar = 10.0;
    int n0 = 45;
    double horizon_ms = 60.0;
    int samples = 601;
    std::uint64_t seed = 1;
    int n_traj = 10000;
    std::string mode = "master";  // master | ssa | both
    std::string out = "observables.csv";
    std::string snapshots;        // empty: no snapshot file
    std::string preset;           // empty, axial, or radial
};

inline double resolve_gamma_heat(const RunConfig& cfg) {
    if (cfg.gamma_heat && cfg.gamma_heat_inv_ms)
        throw config_error("give exactly one of gamma_heat and gamma_heat_inv_ms");
    if (cfg.gamma_heat) return *cfg.gamma_heat;
    if (cfg.gamma_heat_inv_ms) return rate_from_inverse_ms(*cfg.gamma_heat_inv_ms);
    if (!cfg.preset.empty()) return rate_from_inverse_ms(preset_inverse_gamma_ms(cfg.preset));
    return rate_from_inverse_ms(23.0);  // axial default
}

inline double resolve_gamma_cool(const RunConfig& cfg) {
    if (cfg.gamma_cool && cfg.gamma_cool_inv_ms)
        throw config_error("give exactly one of gamma_cool and gamma_cool_inv_ms");
    if (cfg.gamma_cool) return *cfg.gamma_cool;
    if (cfg.gamma_cool_inv_ms) return rate_from_inverse_ms(*cfg.gamma_cool_inv_ms);
    return 0.0;  // cooling off by default
}

inline TrapModel to_model(const RunConfig& cfg) {
    TrapModel model;
    model.levels = cfg.levels;
    model.gamma_heat = resolve_gamma_heat(cfg);
    model.gamma_cool = resolve_gamma_cool(cfg);
    model.nbar = cfg.nbar;
    validate(model);
    return model;
}

inline void check_run_config(const RunConfig& cfg) {
    if (!(cfg.horizon_ms > 0.0)) throw config_error("horizon_ms must be > 0");
    if (cfg.samples < 2) throw config_error("samples must be >= 2");
    if (cfg.n_traj < 1) throw config_error("n_traj must be >= 1");
    if (cfg.mode != "master" && cfg.mode != "ssa" && cfg.mode != "both")
        throw config_error("mode must be master, ssa, or both");
    if (!cfg.preset.empty()) preset_inverse_gamma_ms(cfg.preset);  // validates the name
    to_model(cfg);
    if (cfg.n0 < 0 || cfg.n0 > cfg.levels - 2)
        throw config_error("n0 must be in [0, levels-2]");
}

/// Apply one key=value setting (shared by config files and flag handling).
inline void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto as_double = [&](const std::string& v) {
        std::size_t pos = 0;
        double d;
        try {
            d = std::stod(v, &pos);
        } catch (const std::exception&) {
            throw config_error("key '" + key + "': expected a number, got '" + v + "'");
        }
        if (pos != v.size())
            throw config_error("key '" + key + "': trailing characters in '" + v + "'");
        return d;
    };
    auto as_int = [&](const std::string& v) {
        const double d = as_double(v);
        const int i = static_cast<int>(d);
        if (static_cast<double>(i) != d)
            throw config_error("key '" + key + "': expected an integer, got '" + v + "'");
        return i;
    };

    if (key == "levels") cfg.levels = as_int(value);
    else if (key == "gamma_heat") cfg.gamma_heat = as_double(value);
    else if (key == "gamma_heat_inv_ms") cfg.gamma_heat_inv_ms = as_double(value);
    else if (key == "gamma_cool") cfg.gamma_cool = as_double(value);
    else if (key == "gamma_cool_inv_ms") cfg.gamma_cool_inv_ms = as_double(value);
    else if (key == "nbar") cfg.nbar = as_double(value);
    else if (key == "n0") cfg.n0 = as_int(value);
    else if (key == "horizon_ms") cfg.horizon_ms = as_double(value);
    else if (key == "samples") cfg.samples = as_int(value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "n_traj") cfg.n_traj = as_int(value);
    else if (key == "mode") cfg.mode = value;
    else if (key == "out") cfg.out = value;
    else if (key == "snapshots") cfg.snapshots = value;
    else if (key == "preset") cfg.preset = value;
    else throw config_error("unknown config key '" + key + "'");
}

/// key=value lines; '#' starts a comment; blank lines ignored.
inline RunConfig load_config_file(const std::string& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(path + ":" + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw config_error(path + ":" + std::to_string(lineno) + ": empty key");
        apply_key(base, key, value);
    }
    return base;
}

namespace detail {

inline std::string full_precision(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// key=value serialization; reloading reproduces the same run.
inline std::string serialize(const RunConfig& cfg) {
    std::ostringstream os;
    os << "levels = " << cfg.levels << '\n';
    if (cfg.gamma_heat) os << "gamma_heat = " << detail::full_precision(*cfg.gamma_heat) << '\n';
    if (cfg.gamma_heat_inv_ms)
        os << "gamma_heat_inv_ms = " << detail::full_precision(*cfg.gamma_heat_inv_ms) << '\n';
    if (cfg.gamma_cool) os << "gamma_cool = " << detail::full_precision(*cfg.gamma_cool) << '\n';
    if (cfg.gamma_cool_inv_ms)
        os << "gamma_cool_inv_ms = " << detail::full_precision(*cfg.gamma_cool_inv_ms) << '\n';
    os << "nbar = " << detail::full_precision(cfg.nbar) << '\n';
    os << "n0 = " << cfg.n0 << '\n';
    os << "horizon_ms = " << detail::full_precision(cfg.horizon_ms) << '\n';
    os << "samples = " << cfg.samples << '\n';
    os << "seed = " << cfg.seed << '\n';
    os << "n_traj = " << cfg.n_traj << '\n';
    os << "mode = " << cfg.mode << '\n';
    os << "out = " << cfg.out << '\n';
    if (!cfg.snapshots.empty()) os << "snapshots = " << cfg.snapshots << '\n';
    if (!cfg.preset.empty()) os << "preset = " << cfg.preset << '\n';
    return os.str();
}

/// Snapshot times used when writing distribution files, in ms; entries
/// beyond the horizon are dropped.
inline std::vector<double> default_snapshot_times_ms(double horizon_ms) {
    const double fixed[] = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 60.0};
    std::vector<double> out;
    for (double t : fixed)
        if (t <= horizon_ms) out.push_back(t);
    if (out.empty() || out.back() < horizon_ms) out.push_back(horizon_ms);
    return out;
}

}  // namespace trapheat
