#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "trapheat/integrator.hpp"
#include "trapheat/model.hpp"
#include "trapheat/observables.hpp"
#include "trapheat/ssa.hpp"

namespace trapheat {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

// ---------------------------------------------------------------------------
// Dense matrix exponential, scaling-and-squaring with a Taylor series.
// Only used on small ladders; independent of the banded RK4 path, which is
// what makes it usable as a propagation oracle.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> dense_identity(int n) {
    std::vector<double> id(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) id[static_cast<std::size_t>(i) * n + i] = 1.0;
    return id;
}

inline std::vector<double> dense_multiply(const std::vector<double>& a,
                                          const std::vector<double>& b, int n) {
    std::vector<double> c(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const double aik = a[static_cast<std::size_t>(i) * n + k];
            if (aik == 0.0) continue;
            for (int j = 0; j < n; ++j)
                c[static_cast<std::size_t>(i) * n + j] += aik * b[static_cast<std::size_t>(k) * n + j];
        }
    return c;
}

}  // namespace detail

inline std::vector<double> dense_from_generator(const RateGenerator& gen) {
    const int n = gen.size();
    std::vector<double> a(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - 2); j <= std::min(n - 1, i + 2); ++j)
            a[static_cast<std::size_t>(i) * n + j] = gen.at(i, j);
    return a;
}

inline std::vector<double> dense_expm(std::vector<double> a, int n) {
    double norm1 = 0.0;
    for (int j = 0; j < n; ++j) {
        double col = 0.0;
        for (int i = 0; i < n; ++i) col += std::abs(a[static_cast<std::size_t>(i) * n + j]);
        norm1 = std::max(norm1, col);
    }
    int squarings = 0;
    while (norm1 > 0.5) {
        norm1 *= 0.5;
        ++squarings;
    }
    const double scale = std::ldexp(1.0, -squarings);
    for (double& v : a) v *= scale;

    std::vector<double> result = detail::dense_identity(n);
    std::vector<double> term = detail::dense_identity(n);
    for (int k = 1; k <= 40; ++k) {
        term = detail::dense_multiply(term, a, n);
        const double w = 1.0 / static_cast<double>(k);
        double tmax = 0.0;
        for (std::size_t i = 0; i < term.size(); ++i) {
            term[i] *= w;
            result[i] += term[i];
            tmax = std::max(tmax, std::abs(term[i]));
        }
        if (tmax < 1e-20) break;
    }
    for (int s = 0; s < squarings; ++s) result = detail::dense_multiply(result, result, n);
    return result;
}

/// exp(A t) p0 through the dense oracle.
inline std::vector<double> expm_apply(const RateGenerator& gen, const std::vector<double>& p0,
                                      double t) {
    const int n = gen.size();
    auto a = dense_from_generator(gen);
    for (double& v : a) v *= t;
    const auto e = dense_expm(std::move(a), n);
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += e[static_cast<std::size_t>(i) * n + j] * p0[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cross-module invariant checks. Each takes the objects under test so that a
// harness can also run them against deliberately corrupted generators.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_g(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace detail

/// Off-diagonal entries non-negative, diagonal entries non-positive.
inline CheckResult check_generator_signs(const RateGenerator& gen, const std::string& label) {
    for (int i = 0; i < gen.size(); ++i) {
        for (int k = RateGenerator::kMinOffset; k <= RateGenerator::kMaxOffset; ++k) {
            const int j = i + k;
            if (j < 0 || j >= gen.size()) continue;
            const double v = gen.at(i, j);
            if (k == 0 && v > 0.0)
                return {"signs(" + label + ")", false,
                        "positive diagonal at n=" + std::to_string(i)};
            if (k != 0 && v < 0.0)
                return {"signs(" + label + ")", false,
                        "negative off-diagonal at row " + std::to_string(i)};
        }
    }
    return {"signs(" + label + ")", true, "off-diagonals >= 0, diagonals <= 0"};
}

/// Heating columns: interior sums vanish to machine precision; the two top
/// columns leak exactly their upward rate.
inline CheckResult check_heating_column_sums(const RateGenerator& gen, const TrapModel& model) {
    const int L = gen.size();
    const double g8 = model.gamma_heat / 8.0;
    const double scale = std::max(gen.max_abs_diagonal(), 1.0);
    for (int j = 0; j < L; ++j) {
        const double sum = gen.column_sum(j);
        const double expected =
            j >= L - 2 ? -g8 * static_cast<double>(j + 2) * static_cast<double>(j + 1) : 0.0;
        if (std::abs(sum - expected) > 1e-13 * scale)
            return {"heating-column-sums", false,
                    "column " + std::to_string(j) + ": sum " + detail::format_g(sum) +
                        " expected " + detail::format_g(expected)};
    }
    return {"heating-column-sums", true, "interior columns conserve, edge columns absorb"};
}

inline CheckResult check_cooling_column_sums(const RateGenerator& gen, const TrapModel& model) {
    const int L = gen.size();
    const double scale = std::max(gen.max_abs_diagonal(), 1.0);
    for (int j = 0; j < L; ++j) {
        const double sum = gen.column_sum(j);
        const double expected =
            j == L - 1 ? -model.gamma_cool * model.nbar * static_cast<double>(L) : 0.0;
        if (std::abs(sum - expected) > 1e-13 * scale)
            return {"cooling-column-sums", false,
                    "column " + std::to_string(j) + ": sum " + detail::format_g(sum) +
                        " expected " + detail::format_g(expected)};
    }
    return {"cooling-column-sums", true, "interior columns conserve, top column absorbs"};
}

/// Pairwise flux balance of the bath operator against the geometric weights
/// g(n) = (nbar/(nbar+1))^n: up(n) g(n) == down(n+1) g(n+1) for n <= L-2.
inline CheckResult check_cooling_detailed_balance(const RateGenerator& gen,
                                                  const TrapModel& model) {
    if (model.nbar <= 0.0)
        return {"cooling-detailed-balance", true, "trivial at nbar = 0"};
    const double q = model.nbar / (model.nbar + 1.0);
    double weight = 1.0;  // q^n, iteratively
    for (int n = 0; n + 1 < gen.size(); ++n) {
        const double up = gen.at(n + 1, n);
        const double down = gen.at(n, n + 1);
        const double lhs = up * weight;
        const double rhs = down * weight * q;
        const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
        if (std::abs(lhs - rhs) > 1e-12 * scale)
            return {"cooling-detailed-balance", false,
                    "flux imbalance between levels " + std::to_string(n) + " and " +
                        std::to_string(n + 1)};
        weight *= q;
    }
    return {"cooling-detailed-balance", true, "geometric flux balance holds"};
}

/// Heating never mixes parities: an even-support start keeps odd levels empty.
inline CheckResult check_parity_conservation(const TrapModel& model) {
    auto gen = build_heating_generator(model);
    LevelDistribution init;
    init.probs.assign(static_cast<std::size_t>(model.levels), 0.0);
    const std::size_t even_lo = model.levels >= 48 ? 44 : 2;
    init.probs[even_lo] = 0.5;
    init.probs[even_lo + 2] = 0.5;
    const auto snaps = evolve(gen, init, TimeGrid{0.0, 0.005, 6});
    double odd = 0.0;
    for (const auto& s : snaps)
        for (std::size_t n = 1; n < s.probs.size(); n += 2) odd = std::max(odd, std::abs(s.probs[n]));
    if (odd >= 1e-14)
        return {"parity-conservation", false, "odd-level mass " + detail::format_g(odd)};
    return {"parity-conservation", true, "odd-level mass below 1e-14"};
}

/// Mass non-increasing and entries above the negativity tolerance along a
/// heating+cooling evolution (evolve() itself enforces this; the check
/// re-verifies on the returned snapshots).
inline CheckResult check_mass_positivity(const TrapModel& model) {
    auto gen = combine_generators(build_heating_generator(model), build_cooling_generator(model));
    const auto snaps = evolve(gen, initial_distribution(model, 45), TimeGrid{0.0, 0.060, 61});
    double prev = 1.0 + kMassTolerance;
    for (const auto& s : snaps) {
        double mass = 0.0, lowest = 0.0;
        for (double p : s.probs) {
            mass += p;
            lowest = std::min(lowest, p);
        }
        if (lowest < -kNegTolerance)
            return {"mass-positivity", false,
                    "entry " + detail::format_g(lowest) + " at t = " + detail::format_g(s.time)};
        if (mass > prev + kMassTolerance)
            return {"mass-positivity", false, "mass grew at t = " + detail::format_g(s.time)};
        prev = mass;
    }
    return {"mass-positivity", true, "mass non-increasing, entries within tolerance"};
}

/// Master-equation mean against the closed moment system while escape is
/// negligible (< 1e-10 cumulative).
inline CheckResult check_moment_agreement() {
    TrapModel model;
    model.levels = 800;  // the upper tail is heavy; escape must stay < 1e-10
    model.gamma_heat = 1000.0 / 23.0;
    LevelDistribution init;
    init.probs.assign(800, 0.0);
    init.probs[5] = 0.5;
    init.probs[6] = 0.5;
    const TimeGrid grid{0.0, 0.010, 11};
    const auto gen = build_heating_generator(model);
    IntegratorConfig cfg;
    cfg.max_step = 1.0 / gen.max_abs_diagonal();  // well inside RK4 stability
    const auto snaps = evolve(gen, init, grid, cfg);
    const auto oracle = moment_oracle(model, 5.5, 0.25, grid);
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        double mass = 0.0;
        for (double p : snaps[k].probs) mass += p;
        if (1.0 - mass >= 1e-10)
            return {"moment-agreement", false, "escape not negligible on the test window"};
        const auto mom = conditional_moments(snaps[k]);
        const double rel = std::abs(mom.mean - oracle[k].mean) / oracle[k].mean;
        if (rel > 1e-4)
            return {"moment-agreement", false,
                    "mean relative error " + detail::format_g(rel) + " at t = " +
                        detail::format_g(snaps[k].time)};
    }
    return {"moment-agreement", true, "mean matches moment system within 1e-4"};
}

/// Fixed-seed ensemble on a 6-level ladder against the dense exponential.
inline CheckResult check_ssa_agreement(std::uint64_t seed) {
    TrapModel model;
    model.levels = 6;
    model.gamma_heat = 40.0;
    model.gamma_cool = 25.0;
    model.nbar = 1.5;
    const int n0 = 2;
    const int n_traj = 20000;
    const std::vector<double> times{0.01, 0.02, 0.04, 0.08};
    const auto summary = run_ensemble(model, n0, times.back(), n_traj, seed, times, true);

    auto gen = combine_generators(build_heating_generator(model), build_cooling_generator(model));
    std::vector<double> p0(6, 0.0);
    p0[n0] = 0.5;
    p0[n0 + 1] = 0.5;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const auto pt = expm_apply(gen, p0, times[k]);
        double s = 0.0;
        for (double v : pt) s += v;
        const double se = std::max(summary.std_error[k],
                                   std::sqrt(s * (1.0 - s) / static_cast<double>(n_traj)));
        if (std::abs(summary.survival[k] - s) > 3.0 * se)
            return {"ssa-agreement", false,
                    "survival off by more than 3 standard errors at t = " +
                        detail::format_g(times[k])};
    }
    return {"ssa-agreement", true, "ensemble survival within 3 standard errors"};
}

/// The cross-module suite behind the `validate` command, on pristine
/// generators with pinned parameters and a recorded seed.
inline std::vector<CheckResult> run_invariant_suite(std::uint64_t seed = 20080731ULL) {
    TrapModel model;
    model.levels = 100;
    model.gamma_heat = 1000.0 / 23.0;
    model.gamma_cool = 500.0;
    model.nbar = 10.0;

    const auto heat = build_heating_generator(model);
    const auto cool = build_cooling_generator(model);
    std::vector<CheckResult> results;
    results.push_back(check_generator_signs(heat, "heating"));
    results.push_back(check_generator_signs(cool, "cooling"));
    results.push_back(check_heating_column_sums(heat, model));
    results.push_back(check_cooling_column_sums(cool, model));
    results.push_back(check_cooling_detailed_balance(cool, model));
    results.push_back(check_parity_conservation(model));
    results.push_back(check_mass_positivity(model));
    results.push_back(check_moment_agreement());
    results.push_back(check_ssa_agreement(seed));
    return results;
}

}  // namespace trapheat
