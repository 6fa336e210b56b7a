// trapsim: master-equation and Monte Carlo simulation of a single atom in a
// truncated harmonic trap heated by laser intensity noise, with optional
// bath cooling, plus spectrum-to-heating-rate conversion and an invariant
// suite. Emits plot-ready comma-separated text.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trapheat/config.hpp"
#include "trapheat/integrator.hpp"
#include "trapheat/io.hpp"
#include "trapheat/model.hpp"
#include "trapheat/observables.hpp"
#include "trapheat/spectrum.hpp"
#include "trapheat/ssa.hpp"
#include "trapheat/validate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidationFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
    std::optional<std::string> config_path;
    std::optional<int> levels;
    std::optional<double> gamma_heat;
    std::optional<double> gamma_heat_inv_ms;
    std::optional<double> gamma_cool;
    std::optional<double> gamma_cool_inv_ms;
    std::optional<double> nbar;
    std::optional<int> n0;
    std::optional<double> horizon_ms;
    std::optional<int> samples;
    std::optional<std::uint64_t> seed;
    std::optional<int> n_traj;
    std::optional<std::string> mode;
    std::optional<std::string> out;
    std::optional<std::string> snapshots;
    std::optional<std::string> preset;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "key=value config file (flags override it)");
    cmd->add_option("--levels", f.levels, "number of bound levels retained");
    auto* gh = cmd->add_option("--gamma-heat", f.gamma_heat, "heating rate constant, 1/s");
    auto* ghi = cmd->add_option("--gamma-heat-inv-ms", f.gamma_heat_inv_ms,
                                "inverse heating rate, ms");
    gh->excludes(ghi);
    ghi->excludes(gh);
    auto* gc = cmd->add_option("--gamma-cool", f.gamma_cool, "bath coupling rate, 1/s");
    auto* gci = cmd->add_option("--gamma-cool-inv-ms", f.gamma_cool_inv_ms,
                                "inverse cooling rate, ms");
    gc->excludes(gci);
    gci->excludes(gc);
    cmd->add_option("--nbar", f.nbar, "bath mean excitation");
    cmd->add_option("--n0", f.n0, "initial level (mass split over n0 and n0+1)");
    cmd->add_option("--horizon-ms", f.horizon_ms, "simulated time span, ms");
    cmd->add_option("--samples", f.samples, "number of output samples");
    cmd->add_option("--seed", f.seed, "Monte Carlo base seed");
    cmd->add_option("--n-traj", f.n_traj, "Monte Carlo trajectory count");
    cmd->add_option("--mode", f.mode, "master | ssa | both");
    cmd->add_option("--out", f.out, "output file path");
    cmd->add_option("--snapshots", f.snapshots, "also write distribution snapshots to this path");
    cmd->add_option("--preset", f.preset, "measured heating preset: axial or radial");
}

trapheat::RunConfig build_config(const CommonFlags& f) {
    trapheat::RunConfig cfg;
    if (f.config_path) cfg = trapheat::load_config_file(*f.config_path, cfg);
    if (f.levels) cfg.levels = *f.levels;
    if (f.gamma_heat) {
        cfg.gamma_heat = *f.gamma_heat;
        cfg.gamma_heat_inv_ms.reset();
    }
    if (f.gamma_heat_inv_ms) {
        cfg.gamma_heat_inv_ms = *f.gamma_heat_inv_ms;
        cfg.gamma_heat.reset();
    }
    if (f.gamma_cool) {
        cfg.gamma_cool = *f.gamma_cool;
        cfg.gamma_cool_inv_ms.reset();
    }
    if (f.gamma_cool_inv_ms) {
        cfg.gamma_cool_inv_ms = *f.gamma_cool_inv_ms;
        cfg.gamma_cool.reset();
    }
    if (f.nbar) cfg.nbar = *f.nbar;
    if (f.n0) cfg.n0 = *f.n0;
    if (f.horizon_ms) cfg.horizon_ms = *f.horizon_ms;
    if (f.samples) cfg.samples = *f.samples;
    if (f.seed) cfg.seed = *f.seed;
    if (f.n_traj) cfg.n_traj = *f.n_traj;
    if (f.mode) cfg.mode = *f.mode;
    if (f.out) cfg.out = *f.out;
    if (f.snapshots) cfg.snapshots = *f.snapshots;
    if (f.preset) cfg.preset = *f.preset;
    trapheat::check_run_config(cfg);
    return cfg;
}

trapheat::RateGenerator build_generator(const trapheat::TrapModel& model) {
    auto gen = trapheat::build_heating_generator(model);
    if (model.gamma_cool > 0.0)
        gen = trapheat::combine_generators(gen, trapheat::build_cooling_generator(model));
    return gen;
}

int cmd_simulate(const CommonFlags& flags, const std::optional<std::string>& lifetimes_path) {
    const auto cfg = build_config(flags);
    const auto model = trapheat::to_model(cfg);
    const double horizon_s = trapheat::seconds_from_ms(cfg.horizon_ms);
    const trapheat::TimeGrid grid{0.0, horizon_s, cfg.samples};

    if (cfg.mode == "master" || cfg.mode == "both") {
        const auto gen = build_generator(model);
        const auto init = trapheat::initial_distribution(model, cfg.n0);
        const auto snaps = trapheat::evolve(gen, init, grid);
        const auto series = trapheat::reduce_series(snaps);
        trapheat::write_observables_csv(cfg.out, series, cfg);
        std::cout << "master: survival(" << cfg.horizon_ms << " ms) = "
                  << series.survival.back() << ", wrote " << cfg.out << '\n';
        if (!cfg.snapshots.empty()) {
            std::vector<double> snap_times;
            for (double tms : trapheat::default_snapshot_times_ms(cfg.horizon_ms))
                snap_times.push_back(trapheat::seconds_from_ms(tms));
            const auto dists = trapheat::evolve_at_times(gen, init, snap_times);
            trapheat::write_snapshots_csv(cfg.snapshots, dists, cfg);
            std::cout << "master: wrote snapshots to " << cfg.snapshots << '\n';
        }
    }
    if (cfg.mode == "ssa" || cfg.mode == "both") {
        const auto summary = trapheat::run_ensemble(model, cfg.n0, horizon_s, cfg.n_traj,
                                                    cfg.seed, grid.times(), true);
        const std::string path = cfg.mode == "ssa" ? cfg.out : cfg.out + ".ssa";
        trapheat::write_ensemble_csv(path, summary, cfg);
        std::cout << "ssa: survival(" << cfg.horizon_ms << " ms) = "
                  << summary.survival.back() << " +- " << summary.std_error.back()
                  << ", wrote " << path << '\n';
        if (lifetimes_path) {
            trapheat::write_lifetime_samples(*lifetimes_path, summary.lifetime_samples);
            std::cout << "ssa: wrote " << summary.lifetime_samples.size()
                      << " lifetime samples to " << *lifetimes_path << '\n';
        }
    }
    return kExitOk;
}

int cmd_scan_cooling(const CommonFlags& flags, const std::vector<double>& inv_ms_values) {
    auto cfg = build_config(flags);
    const double horizon_s = trapheat::seconds_from_ms(cfg.horizon_ms);
    const trapheat::TimeGrid grid{0.0, horizon_s, cfg.samples};

    std::vector<double> survivals;
    for (double inv_ms : inv_ms_values) {
        auto scan_cfg = cfg;
        scan_cfg.gamma_cool_inv_ms = inv_ms;
        scan_cfg.gamma_cool.reset();
        const auto model = trapheat::to_model(scan_cfg);
        const auto snaps = trapheat::evolve(build_generator(model),
                                            trapheat::initial_distribution(model, cfg.n0), grid);
        survivals.push_back(trapheat::survival(snaps.back()));
    }
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < survivals.size(); ++i)
        if (survivals[i] > survivals[argmax]) argmax = i;

    trapheat::write_scan_csv(std::cout, inv_ms_values, survivals, argmax, cfg);
    if (flags.out) {
        auto out = trapheat::detail::open_output(*flags.out);
        trapheat::write_scan_csv(out, inv_ms_values, survivals, argmax, cfg);
    }
    return kExitOk;
}

int cmd_spectrum(const std::optional<std::string>& trace_path, double nu_tr_hz,
                 std::optional<int> max_lag, const std::string& taper_name_in,
                 const std::optional<std::string>& preset, bool as_json) {
    nlohmann::json report;
    if (preset) {
        const double inv_ms = trapheat::preset_inverse_gamma_ms(*preset);
        const double gamma = trapheat::rate_from_inverse_ms(inv_ms);
        report = {{"preset", *preset},
                  {"gamma_eps_per_s", gamma},
                  {"inv_gamma_eps_ms", inv_ms}};
        if (as_json) {
            std::cout << report.dump(2) << '\n';
        } else {
            std::cout << "preset " << *preset << ": 1/Gamma_eps = " << inv_ms
                      << " ms (Gamma_eps = " << gamma << " 1/s)\n";
        }
        return kExitOk;
    }

    const auto trace = trapheat::load_noise_trace(*trace_path);
    const int lag = max_lag ? *max_lag : trapheat::default_max_lag(trace);
    const auto taper = taper_name_in == "hann" ? trapheat::Taper::hann : trapheat::Taper::none;
    const double omega = 4.0 * std::numbers::pi * nu_tr_hz;
    const double s_ang = trapheat::spectrum_at(trace, omega, lag, taper);
    const double s_hz = trapheat::hz_spectrum_from_angular(std::max(s_ang, 0.0));
    const double gamma = trapheat::gamma_from_spectrum(nu_tr_hz, s_hz);

    report = {{"trace", *trace_path},
              {"samples", trace.samples.size()},
              {"dt_s", trace.dt},
              {"max_lag", lag},
              {"taper", trapheat::taper_name(taper)},
              {"nu_tr_hz", nu_tr_hz},
              {"s_eps_at_2nu_per_hz", s_hz},
              {"gamma_eps_per_s", gamma},
              {"inv_gamma_eps_ms", gamma > 0.0 ? 1e3 / gamma : std::numeric_limits<double>::infinity()}};
    if (as_json) {
        std::cout << report.dump(2) << '\n';
    } else {
        std::cout << "S_eps(2 nu_tr) = " << s_hz << " 1/Hz\n"
                  << "Gamma_eps      = " << gamma << " 1/s\n";
        if (gamma > 0.0)
            std::cout << "1/Gamma_eps    = " << 1e3 / gamma << " ms\n";
        else
            std::cout << "1/Gamma_eps    = inf\n";
    }
    return kExitOk;
}

int cmd_validate(std::uint64_t seed) {
    const auto results = trapheat::run_invariant_suite(seed);
    bool all = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << '\n';
        all = all && r.passed;
    }
    std::cout << (all ? "all checks passed\n" : "some checks FAILED\n");
    return all ? kExitOk : kExitValidationFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trapped-atom heating/cooling master-equation toolkit"};
    app.require_subcommand(1);
    std::cout.precision(17);

    CommonFlags sim_flags;
    std::optional<std::string> lifetimes_path;
    auto* sim = app.add_subcommand("simulate",
                                   "propagate the master equation and/or a Monte Carlo ensemble");
    add_common_flags(sim, sim_flags);
    sim->add_option("--lifetimes", lifetimes_path,
                    "write Monte Carlo escape times (one per line) to this path");

    CommonFlags scan_flags;
    std::vector<double> scan_values;
    auto* scan = app.add_subcommand("scan-cooling",
                                    "survival at the horizon across inverse cooling rates");
    add_common_flags(scan, scan_flags);
    scan->add_option("--values", scan_values, "inverse cooling rates to scan, ms")
        ->required()
        ->delimiter(',');

    std::optional<std::string> trace_path;
    double nu_tr_hz = 0.0;
    std::optional<int> spec_max_lag;
    std::string spec_taper = "none";
    std::optional<std::string> spec_preset;
    bool spec_json = false;
    auto* spec = app.add_subcommand("spectrum",
                                    "noise spectrum and heating rate from a sampled trace");
    auto* opt_trace = spec->add_option("--trace", trace_path, "two-column time,epsilon file");
    auto* opt_nu = spec->add_option("--nu-tr", nu_tr_hz, "trap frequency, Hz");
    spec->add_option("--max-lag", spec_max_lag, "autocorrelation lags (default samples/4)");
    spec->add_option("--taper", spec_taper, "none | hann")
        ->check(CLI::IsMember({"none", "hann"}));
    auto* opt_preset = spec->add_option("--preset", spec_preset, "axial | radial");
    spec->add_flag("--json", spec_json, "machine-readable JSON report");
    opt_trace->excludes(opt_preset);
    opt_trace->needs(opt_nu);

    std::uint64_t validate_seed = 20080731ULL;
    auto* val = app.add_subcommand("validate", "run the cross-module invariant suite");
    val->add_option("--seed", validate_seed, "seed for the stochastic agreement check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_flags, lifetimes_path);
        if (scan->parsed()) return cmd_scan_cooling(scan_flags, scan_values);
        if (spec->parsed()) {
            if (!trace_path && !spec_preset) {
                std::cerr << "spectrum: give --trace with --nu-tr, or --preset\n";
                return kExitUsage;
            }
            return cmd_spectrum(trace_path, nu_tr_hz, spec_max_lag, spec_taper, spec_preset,
                                spec_json);
        }
        if (val->parsed()) return cmd_validate(validate_seed);
    } catch (const trapheat::integration_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const trapheat::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const trapheat::trace_parse_error& e) {
        std::cerr << "trace error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitUsage;
}
