#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "trapheat/config.hpp"
#include "trapheat/model.hpp"
#include "trapheat/observables.hpp"
#include "trapheat/ssa.hpp"

namespace trapheat {

namespace detail {

inline void write_header(std::ostream& out, const RunConfig& cfg,
                         const std::string& column_line) {
    std::istringstream cfg_lines(serialize(cfg));
    std::string line;
    out << "# config:\n";
    while (std::getline(cfg_lines, line)) out << "#   " << line << '\n';
    out << "# columns: " << column_line << '\n';
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    return out;
}

}  // namespace detail

/// Observables as comma-separated text, ms at the interface, full precision.
inline void write_observables_csv(const std::string& path, const ObservableSeries& series,
                                  const RunConfig& cfg) {
    auto out = detail::open_output(path);
    detail::write_header(out, cfg, "t_ms,survival,mean_n,std_n,escape_rate_per_ms");
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << detail::full_precision(ms_from_seconds(series.times[i])) << ','
            << detail::full_precision(series.survival[i]) << ','
            << detail::full_precision(series.mean_n[i]) << ','
            << detail::full_precision(series.std_n[i]) << ','
            << detail::full_precision(per_ms_from_per_s(series.escape_rate[i])) << '\n';
    }
}

/// Distribution snapshots: one row per (time, level) pair.
inline void write_snapshots_csv(const std::string& path,
                                const std::vector<LevelDistribution>& snaps,
                                const RunConfig& cfg) {
    auto out = detail::open_output(path);
    detail::write_header(out, cfg, "t_ms,n,P");
    for (const auto& snap : snaps) {
        const std::string t = detail::full_precision(ms_from_seconds(snap.time));
        for (std::size_t n = 0; n < snap.probs.size(); ++n)
            out << t << ',' << n << ',' << detail::full_precision(snap.probs[n]) << '\n';
    }
}

/// Monte Carlo survival curve with binomial standard errors.
inline void write_ensemble_csv(const std::string& path, const EnsembleSummary& summary,
                               const RunConfig& cfg) {
    auto out = detail::open_output(path);
    detail::write_header(out, cfg, "t_ms,survival,std_error");
    for (std::size_t i = 0; i < summary.times.size(); ++i) {
        out << detail::full_precision(ms_from_seconds(summary.times[i])) << ','
            << detail::full_precision(summary.survival[i]) << ','
            << detail::full_precision(summary.std_error[i]) << '\n';
    }
}

/// Cooling-scan table plus the argmax row marker.
inline void write_scan_csv(std::ostream& out, const std::vector<double>& inv_gamma_cool_ms,
                           const std::vector<double>& survival_at_horizon,
                           std::size_t argmax_index, const RunConfig& cfg) {
    detail::write_header(out, cfg, "inv_gamma_cool_ms,survival_at_horizon");
    for (std::size_t i = 0; i < inv_gamma_cool_ms.size(); ++i) {
        out << detail::full_precision(inv_gamma_cool_ms[i]) << ','
            << detail::full_precision(survival_at_horizon[i]) << '\n';
    }
    out << "# argmax_inv_gamma_cool_ms = "
        << detail::full_precision(inv_gamma_cool_ms[argmax_index]) << '\n';
}

}  // namespace trapheat
