#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "trapheat/model.hpp"

namespace trapheat {

/// Outcome of a single stochastic trajectory.
struct TrajectoryResult {
    bool escaped = false;
    double escape_time = 0.0;  // meaningful when escaped
    int final_level = 0;       // meaningful when not escaped at the horizon
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Uniform double strictly inside (0, 1); keeps -log(u) finite and positive.
inline double uniform_open(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

/// Per-trajectory seed: the index-th output of the splitmix64 stream seeded
/// with base_seed. Closed form, so any trajectory can be reproduced without
/// generating its predecessors, and the ensemble is order-free.
inline std::uint64_t trajectory_seed(std::uint64_t base_seed, std::uint64_t index) {
    return detail::splitmix64(base_seed + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

/// One continuous-time trajectory of the jump process matching the master
/// equation: level-dependent exponential waiting times, jumps +-2 (heating)
/// and +-1 (bath) chosen proportionally to their rates, and any jump to a
/// level >= L counts as escape. With split_initial the start level mirrors
/// the two-level initial distribution (n0 or n0+1, one coin flip drawn
/// before the dynamics).
inline TrajectoryResult simulate_trajectory(const TrapModel& model, int n0, double horizon,
                                            std::uint64_t seed, bool split_initial = false) {
    validate(model);
    const int L = model.levels;
    if (n0 < 0 || n0 > (split_initial ? L - 2 : L - 1))
        throw std::invalid_argument("simulate_trajectory: n0 out of range");
    if (!(horizon >= 0.0))
        throw std::invalid_argument("simulate_trajectory: horizon must be >= 0");

    std::mt19937_64 rng(seed);
    int level = n0;
    if (split_initial && detail::uniform_open(rng) >= 0.5) level = n0 + 1;

    const double g8 = model.gamma_heat / 8.0;
    double t = 0.0;
    for (;;) {
        const double nd = static_cast<double>(level);
        const double heat_up = g8 * (nd + 2.0) * (nd + 1.0);
        const double heat_down = g8 * nd * (nd - 1.0);
        const double cool_up = model.gamma_cool * model.nbar * (nd + 1.0);
        const double cool_down = model.gamma_cool * (model.nbar + 1.0) * nd;
        const double total = heat_up + heat_down + cool_up + cool_down;
        if (total <= 0.0) return TrajectoryResult{false, 0.0, level};

        t += -std::log(detail::uniform_open(rng)) / total;
        if (t > horizon) return TrajectoryResult{false, 0.0, level};

        const double r = detail::uniform_open(rng) * total;
        int next;
        if (r < heat_up) next = level + 2;
        else if (r < heat_up + heat_down) next = level - 2;
        else if (r < heat_up + heat_down + cool_up) next = level + 1;
        else next = level - 1;

        if (next >= L) return TrajectoryResult{true, t, -1};
        level = next;
    }
}

/// Ensemble aggregate: survival curve with binomial standard errors plus the
/// raw escape-time samples (in trajectory order).
struct EnsembleSummary {
    int n_traj = 0;
    std::vector<double> times;
    std::vector<double> survival;
    std::vector<double> std_error;
    std::vector<double> lifetime_samples;
};

inline EnsembleSummary run_ensemble(const TrapModel& model, int n0, double horizon, int n_traj,
                                    std::uint64_t base_seed, const std::vector<double>& times,
                                    bool split_initial = true) {
    if (n_traj < 1)
        throw std::invalid_argument("run_ensemble: n_traj must be >= 1");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] >= times[i - 1]))
            throw std::invalid_argument("run_ensemble: times must be sorted");

    EnsembleSummary summary;
    summary.n_traj = n_traj;
    summary.times = times;
    std::vector<long long> alive(times.size(), 0);
    for (int i = 0; i < n_traj; ++i) {
        const auto res = simulate_trajectory(model, n0, horizon,
                                             trajectory_seed(base_seed, static_cast<std::uint64_t>(i)),
                                             split_initial);
        if (res.escaped) {
            summary.lifetime_samples.push_back(res.escape_time);
            for (std::size_t k = 0; k < times.size(); ++k)
                if (res.escape_time > times[k]) ++alive[k];
        } else {
            for (std::size_t k = 0; k < times.size(); ++k) ++alive[k];
        }
    }
    summary.survival.resize(times.size());
    summary.std_error.resize(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double p = static_cast<double>(alive[k]) / static_cast<double>(n_traj);
        summary.survival[k] = p;
        summary.std_error[k] = std::sqrt(p * (1.0 - p) / static_cast<double>(n_traj));
    }
    return summary;
}

/// One escape time per line, full precision, for external histogramming.
inline void write_lifetime_samples(const std::string& path, const std::vector<double>& samples) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_lifetime_samples: cannot open '" + path + "'");
    out.precision(17);
    for (double t : samples) out << t << '\n';
}

}  // namespace trapheat
