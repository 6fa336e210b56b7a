#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace trapheat {

/// Uniformly sampled fractional-fluctuation record epsilon(t_i).
struct NoiseTrace {
    double dt = 0.0;               // sampling interval, s
    std::vector<double> samples;   // dimensionless fluctuations
};

inline void validate(const NoiseTrace& trace) {
    if (!(trace.dt > 0.0))
        throw std::invalid_argument("NoiseTrace.dt: must be > 0");
    if (trace.samples.size() < 16)
        throw std::invalid_argument("NoiseTrace.samples: need at least 16 samples");
}

inline int default_max_lag(const NoiseTrace& trace) {
    return static_cast<int>(trace.samples.size() / 4);
}

/// Mean-removed biased autocorrelation estimate C(k dt), k = 0..max_lag.
/// The 1/N normalization keeps the implied spectrum positive semidefinite;
/// C(0) is the sample variance.
inline std::vector<double> autocorrelation(const NoiseTrace& trace, int max_lag) {
    validate(trace);
    const std::size_t n = trace.samples.size();
    if (max_lag <= 0 || static_cast<std::size_t>(max_lag) >= n / 2)
        throw std::invalid_argument("autocorrelation: require 0 < max_lag < samples/2");
    double mean = 0.0;
    for (double v : trace.samples) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = trace.samples[i] - mean;

    std::vector<double> corr(static_cast<std::size_t>(max_lag) + 1, 0.0);
    for (int k = 0; k <= max_lag; ++k) {
        double acc = 0.0;
        const std::size_t m = n - static_cast<std::size_t>(k);
        for (std::size_t i = 0; i < m; ++i) acc += centered[i] * centered[i + static_cast<std::size_t>(k)];
        corr[static_cast<std::size_t>(k)] = acc / static_cast<double>(n);
    }
    return corr;
}

enum class Taper { none, hann };

inline const char* taper_name(Taper t) { return t == Taper::hann ? "hann" : "none"; }

/// One-sided spectrum at angular frequency omega from autocorrelation
/// samples: S(omega) = (2/pi) * sum_k w_k cos(omega k dt) C(k dt) dt,
/// a trapezoid discretization of the cosine transform, optionally tapered.
inline double spectrum_from_autocorrelation(const std::vector<double>& corr, double dt,
                                            double omega, Taper taper = Taper::none) {
    if (corr.size() < 2)
        throw std::invalid_argument("spectrum_from_autocorrelation: need at least two lags");
    if (!(dt > 0.0))
        throw std::invalid_argument("spectrum_from_autocorrelation: dt must be > 0");
    if (omega < 0.0)
        throw std::invalid_argument("spectrum_from_autocorrelation: omega must be >= 0");
    const std::size_t kmax = corr.size() - 1;
    double acc = 0.0;
    for (std::size_t k = 0; k <= kmax; ++k) {
        double w = (k == 0 || k == kmax) ? 0.5 : 1.0;
        if (taper == Taper::hann)
            w *= 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(k) /
                                       static_cast<double>(kmax)));
        acc += w * std::cos(omega * static_cast<double>(k) * dt) * corr[k];
    }
    return (2.0 / std::numbers::pi) * acc * dt;
}

inline double spectrum_at(const NoiseTrace& trace, double omega, int max_lag,
                          Taper taper = Taper::none) {
    return spectrum_from_autocorrelation(autocorrelation(trace, max_lag), trace.dt, omega, taper);
}

struct SpectrumSettings {
    int max_lag = 0;
    Taper taper = Taper::none;
};

/// Spectrum values at a set of angular frequencies, with the estimator
/// settings that produced them.
struct SpectrumEstimate {
    std::vector<double> omegas;  // rad/s
    std::vector<double> values;  // per (rad/s)
    SpectrumSettings settings;
};

inline SpectrumEstimate estimate_spectrum(const NoiseTrace& trace,
                                          const std::vector<double>& omegas, int max_lag,
                                          Taper taper = Taper::none) {
    const auto corr = autocorrelation(trace, max_lag);
    SpectrumEstimate est;
    est.omegas = omegas;
    est.values.reserve(omegas.size());
    for (double w : omegas)
        est.values.push_back(spectrum_from_autocorrelation(corr, trace.dt, w, taper));
    est.settings = SpectrumSettings{max_lag, taper};
    return est;
}

// ---------------------------------------------------------------------------
// Frequency-convention mapping. This is the single place where the angular
// estimator above meets the per-Hz convention of the heating-rate formula.
//
// The estimator returns S_ang(omega) with int_0^inf S_ang(omega) d omega
// equal to the variance. The per-Hz one-sided density with the same variance
// normalization is S_hz(f) = 2 pi S_ang(2 pi f). The heating rate constant is
//   Gamma = pi^2 nu_tr^2 S_hz(2 nu_tr),
// which written against the angular estimator is
//   Gamma = pi^2 nu_tr^2 * 2 pi * S_ang(4 pi nu_tr)
// and reproduces exactly the (pi omega_tr^2 / 16) S_ang(2 omega_tr) prefactor
// of the per-level transition rates, so the two published forms of the rate
// are consistent under this mapping.
// ---------------------------------------------------------------------------

/// Per-Hz spectral value from an angular-frequency spectral value.
inline double hz_spectrum_from_angular(double s_angular) {
    return 2.0 * std::numbers::pi * s_angular;
}

/// Heating rate constant from the per-Hz spectrum value at twice the trap
/// frequency: Gamma = pi^2 nu_tr^2 S(2 nu_tr).
inline double gamma_from_spectrum(double nu_tr_hz, double s_at_2nu_per_hz) {
    if (!(nu_tr_hz > 0.0))
        throw std::invalid_argument("gamma_from_spectrum: nu_tr must be > 0");
    if (s_at_2nu_per_hz < 0.0)
        throw std::invalid_argument("gamma_from_spectrum: spectrum value must be >= 0");
    const double pi = std::numbers::pi;
    return pi * pi * nu_tr_hz * nu_tr_hz * s_at_2nu_per_hz;
}

/// Full pipeline: estimate S_ang at omega = 4 pi nu_tr from the trace,
/// convert to per-Hz, and apply the heating-rate formula.
inline double gamma_from_trace(const NoiseTrace& trace, double nu_tr_hz, int max_lag,
                               Taper taper = Taper::none) {
    const double omega = 4.0 * std::numbers::pi * nu_tr_hz;  // angular 2*omega_tr
    const double s_ang = spectrum_at(trace, omega, max_lag, taper);
    return gamma_from_spectrum(nu_tr_hz, hz_spectrum_from_angular(std::max(s_ang, 0.0)));
}

// ---------------------------------------------------------------------------
// Trace file input: two columns (time_seconds, epsilon), comma- or
// whitespace-separated, '#' comment lines ignored. Time stamps must be
// uniform within 1e-6 relative jitter.
// ---------------------------------------------------------------------------

class trace_parse_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline NoiseTrace load_noise_trace(std::istream& in) {
    std::vector<double> times, values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream ls(line);
        double t, v;
        if (!(ls >> t >> v))
            throw trace_parse_error("trace line " + std::to_string(lineno) +
                                    ": expected two numeric columns");
        double extra;
        if (ls >> extra)
            throw trace_parse_error("trace line " + std::to_string(lineno) +
                                    ": more than two columns");
        times.push_back(t);
        values.push_back(v);
    }
    if (times.size() < 2)
        throw trace_parse_error("trace: need at least two samples");
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(dt > 0.0))
        throw trace_parse_error("trace: time stamps must be increasing");
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double step = times[i] - times[i - 1];
        if (std::abs(step - dt) > 1e-6 * dt)
            throw trace_parse_error("trace sample " + std::to_string(i) +
                                    ": non-uniform time stamps (relative jitter above 1e-6)");
    }
    return NoiseTrace{dt, std::move(values)};
}

inline NoiseTrace load_noise_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw trace_parse_error("trace: cannot open '" + path + "'");
    return load_noise_trace(in);
}

}  // namespace trapheat
