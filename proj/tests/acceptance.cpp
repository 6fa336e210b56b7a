// Acceptance suite: end-to-end checks of the shipped behavior at pinned
// tolerances. Prints one pass/fail line per criterion and exits with the
// number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "trapheat/integrator.hpp"
#include "trapheat/model.hpp"
#include "trapheat/observables.hpp"
#include "trapheat/spectrum.hpp"
#include "trapheat/ssa.hpp"
#include "trapheat/validate.hpp"

using namespace trapheat;

namespace {

constexpr double kGammaAxial = 1000.0 / 23.0;  // 1/23 ms
int failures = 0;

void report(int id, const std::string& name, bool passed, const std::string& detail) {
    std::printf("[%s] C%-2d %s: %s\n", passed ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    if (!passed) ++failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TrapModel fig4_model() {
    TrapModel m;
    m.levels = 100;
    m.gamma_heat = kGammaAxial;
    m.gamma_cool = 500.0;  // 1/2 ms
    m.nbar = 10.0;
    return m;
}

RateGenerator full_generator(const TrapModel& m) {
    auto gen = build_heating_generator(m);
    if (m.gamma_cool > 0.0) gen = combine_generators(gen, build_cooling_generator(m));
    return gen;
}

double survival_at_horizon(const TrapModel& m, int n0, double horizon, int samples) {
    const auto snaps = evolve(full_generator(m), initial_distribution(m, n0),
                              TimeGrid{0.0, horizon, samples});
    return survival(snaps.back());
}

char buf[512];

// --- C1: heating + cooling survival at 60 ms -------------------------------
void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    const double s = survival_at_horizon(fig4_model(), 45, 0.060, 61);
    const double dt = elapsed_s(t0);
    const bool ok = std::abs(s - 0.90) <= 0.03 && dt < 5.0;
    std::snprintf(buf, sizeof(buf), "survival(60 ms) = %.6f (target 0.90 +- 0.03), %.2f s (< 5 s)",
                  s, dt);
    report(1, "heating+cooling survival", ok, buf);
}

// --- C2: optimal cooling scan ----------------------------------------------
void criterion_2() {
    const std::vector<double> inv_ms = {0.5, 1.0, 2.0, 4.0};
    std::vector<double> surv;
    for (double v : inv_ms) {
        TrapModel m = fig4_model();
        m.gamma_cool = 1000.0 / v;
        surv.push_back(survival_at_horizon(m, 45, 0.060, 61));
    }
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < surv.size(); ++i)
        if (surv[i] > surv[argmax]) argmax = i;
    const double margin = surv[1] - surv[2];
    const bool ok = inv_ms[argmax] == 1.0 && margin > 0.0 && margin <= 0.05;
    std::snprintf(buf, sizeof(buf),
                  "argmax at %.1f ms (S = %.4f/%.4f/%.4f/%.4f), margin over 2 ms = %.4f",
                  inv_ms[argmax], surv[0], surv[1], surv[2], surv[3], margin);
    report(2, "optimal cooling scan", ok, buf);
}

// --- C3 + C4 share one large heating-only ladder ---------------------------
// The mean law (n0 + 1/2) exp(G t) - 1/2 is the exact moment solution for a
// point start at n0, so the run starts from P(n0) = 1. Samples count toward
// the mean comparison only while cumulative escaped mass is below 1e-10.
struct BigRun {
    std::vector<double> times, means, sigmas, escaped;
};

BigRun big_heating_run() {
    TrapModel m;
    m.levels = 2000;
    m.gamma_heat = kGammaAxial;
    const auto gen = build_heating_generator(m);
    LevelDistribution init;
    init.probs.assign(2000, 0.0);
    init.probs[5] = 1.0;
    IntegratorConfig cfg;
    cfg.max_step = 1.0 / gen.max_abs_diagonal();  // stability-bounded step
    const auto snaps = evolve(gen, init, TimeGrid{0.0, 0.050, 201}, cfg);
    BigRun run;
    for (const auto& s : snaps) {
        double mass = 0.0;
        for (double p : s.probs) mass += p;
        const auto mom = conditional_moments(s);
        run.times.push_back(s.time);
        run.means.push_back(mom.mean);
        run.sigmas.push_back(mom.std_dev);
        run.escaped.push_back(1.0 - mass);
    }
    return run;
}

void criterion_3(const BigRun& run) {
    const double n0 = 5.0;
    double worst = 0.0;
    std::size_t gated = 0;
    for (std::size_t k = 0; k < run.times.size(); ++k) {
        if (run.escaped[k] >= 1e-10) break;
        ++gated;
        const double exact = (n0 + 0.5) * std::exp(kGammaAxial * run.times[k]) - 0.5;
        worst = std::max(worst, std::abs(run.means[k] - exact) / exact);
    }
    const double t_gate = gated > 0 ? run.times[gated - 1] : 0.0;
    // the escape gate must leave a substantive window; 10 ms is ~40% of the run
    const bool ok = gated >= 2 && t_gate >= 0.010 && worst <= 1e-4;
    std::snprintf(buf, sizeof(buf),
                  "max rel err %.3e (<= 1e-4) over %zu samples with escape < 1e-10 (t <= %.2f ms)",
                  worst, gated, t_gate * 1e3);
    report(3, "mean-heating law", ok, buf);
}

void criterion_4(const BigRun& run) {
    // least-squares fit of log sigma(t) over the window 5 <= sigma <= 50
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t n = 0;
    double t_lo = 0.0, t_hi = 0.0;
    for (std::size_t k = 0; k < run.times.size(); ++k) {
        const double s = run.sigmas[k];
        if (!(s >= 5.0 && s <= 50.0)) continue;
        if (n == 0) t_lo = run.times[k];
        t_hi = run.times[k];
        const double y = std::log(s);
        st += run.times[k];
        sy += y;
        stt += run.times[k] * run.times[k];
        sty += run.times[k] * y;
        ++n;
    }
    const double denom = static_cast<double>(n) * stt - st * st;
    const double rate = n >= 3 ? (static_cast<double>(n) * sty - st * sy) / denom : 0.0;
    const double target = 1.5 * kGammaAxial;
    const bool ok = n >= 3 && std::abs(rate - target) <= 0.05 * target;
    std::snprintf(buf, sizeof(buf),
                  "fitted rate %.2f 1/s = %.3f*Gamma over t in [%.2f, %.2f] ms (%zu pts); "
                  "required 1.5*Gamma = %.2f 1/s within 5%%",
                  rate, rate / kGammaAxial, t_lo * 1e3, t_hi * 1e3, n, target);
    report(4, "width-growth law", ok, buf);
}

// --- C5: rapid spreading ----------------------------------------------------
void criterion_5() {
    TrapModel m;
    m.levels = 100;
    m.gamma_heat = kGammaAxial;
    const auto snaps = evolve(build_heating_generator(m), initial_distribution(m, 45),
                              TimeGrid{0.0, 0.002, 5});
    const double sigma0 = conditional_moments(snaps.front()).std_dev;
    const double sigma2 = conditional_moments(snaps.back()).std_dev;
    const bool ok = std::abs(sigma0 - 0.5) <= 1e-9 && sigma2 >= 10.0;
    std::snprintf(buf, sizeof(buf), "sigma(0) = %.3f, sigma(2 ms) = %.3f (>= 10)", sigma0,
                  sigma2);
    report(5, "rapid spreading", ok, buf);
}

// --- C6: cooling equilibrium -------------------------------------------------
void criterion_6() {
    TrapModel m;
    m.levels = 100;
    m.gamma_cool = 500.0;
    m.nbar = 10.0;
    const auto res = stationary_distribution(build_cooling_generator(m));
    double mean = 0.0;
    for (std::size_t n = 0; n < res.distribution.probs.size(); ++n)
        mean += static_cast<double>(n) * res.distribution.probs[n];
    const double q = m.nbar / (m.nbar + 1.0);
    double g = 1.0 / (m.nbar + 1.0);
    double worst = 0.0;
    for (std::size_t n = 0; n < res.distribution.probs.size(); ++n) {
        worst = std::max(worst, std::abs(res.distribution.probs[n] - g));
        g *= q;
    }
    const bool ok = std::abs(mean - 10.0) <= 1e-3 && worst <= 1e-6;
    std::snprintf(buf, sizeof(buf),
                  "stationary mean = %.6f (target 10 +- 1e-3), max |P - geometric| = %.3e "
                  "(<= 1e-6), leaked %.2e%s",
                  mean, worst, res.leaked_mass, res.leak_flagged ? " [flagged]" : "");
    report(6, "cooling equilibrium", ok, buf);
}

// --- C7: SSA vs master equation ---------------------------------------------
void criterion_7() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = 3ULL;  // recorded; the check is seed-exact
    const auto m = fig4_model();
    const int n_traj = 10000;
    const TimeGrid grid{0.0, 0.060, 13};

    const auto snaps = evolve(full_generator(m), initial_distribution(m, 45), grid);
    const auto summary = run_ensemble(m, 45, 0.060, n_traj, seed, grid.times(), true);

    double worst_z = 0.0;
    bool ok = true;
    for (std::size_t k = 0; k < summary.times.size(); ++k) {
        const double p_master = survival(snaps[k]);
        const double se = std::max(summary.std_error[k],
                                   std::sqrt(p_master * (1.0 - p_master) / n_traj));
        const double diff = std::abs(summary.survival[k] - p_master);
        if (se == 0.0) {
            if (diff != 0.0) ok = false;
            continue;
        }
        worst_z = std::max(worst_z, diff / se);
    }
    const double dt = elapsed_s(t0);
    ok = ok && worst_z <= 3.0 && dt < 30.0;
    std::snprintf(buf, sizeof(buf),
                  "max |SSA - master| = %.2f std errors (<= 3) over 13 times, seed %llu, %.2f s "
                  "(< 30 s)",
                  worst_z, static_cast<unsigned long long>(seed), dt);
    report(7, "SSA agreement", ok, buf);
}

// --- C8: small-ladder exactness ----------------------------------------------
void criterion_8() {
    std::mt19937 rng(777);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        TrapModel m;
        m.levels = 12;
        m.gamma_heat = 0.5 + unif(rng) * 50.0;
        m.gamma_cool = unif(rng) * 30.0;
        m.nbar = unif(rng) * 5.0;
        const auto gen = full_generator(m);
        IntegratorConfig cfg;
        cfg.max_step = 0.005 / gen.max_abs_diagonal();
        const auto init = initial_distribution(m, 4);
        const double horizon = 3.0 / gen.max_abs_diagonal();
        const auto snaps = evolve(gen, init, TimeGrid{0.0, horizon, 5}, cfg);
        for (const auto& s : snaps) {
            const auto ref = expm_apply(gen, init.probs, s.time);
            double ref_max = 0.0, sup = 0.0;
            for (std::size_t i = 0; i < ref.size(); ++i) {
                ref_max = std::max(ref_max, std::abs(ref[i]));
                sup = std::max(sup, std::abs(s.probs[i] - ref[i]));
            }
            worst = std::max(worst, sup / ref_max);
        }
    }
    const bool ok = worst <= 1e-8;
    std::snprintf(buf, sizeof(buf),
                  "max relative deviation from dense exponential = %.3e (<= 1e-8, 5 random "
                  "12-level ladders)",
                  worst);
    report(8, "small-ladder exactness", ok, buf);
}

// --- C9: spectrum pipeline ----------------------------------------------------
void criterion_9() {
    const double pi = std::numbers::pi;
    // exponentially correlated trace with known gamma and c
    const double gamma = 50.0, c = 0.04, dt = 1e-3;
    const std::size_t n = 200000;
    std::mt19937_64 rng(314159);
    auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    auto gauss = [&] {
        return std::sqrt(-2.0 * std::log(uniform())) * std::cos(2.0 * pi * uniform());
    };
    NoiseTrace trace;
    trace.dt = dt;
    trace.samples.resize(n);
    const double rho = std::exp(-gamma * dt);
    double x = std::sqrt(c) * gauss();
    const double innov = std::sqrt(c * (1.0 - rho * rho));
    for (std::size_t i = 0; i < n; ++i) {
        trace.samples[i] = x;
        x = rho * x + innov * gauss();
    }
    const double s_est = spectrum_at(trace, gamma, 200);
    const double s_exact = (2.0 / pi) * c * gamma / (2.0 * gamma * gamma);
    const double rel = std::abs(s_est - s_exact) / s_exact;

    const double g = gamma_from_spectrum(1000.0, 1e-4);
    const double g_exact = pi * pi * 100.0;
    const double g_rel = std::abs(g - g_exact) / g_exact;

    const bool ok = rel <= 0.10 && g_rel <= 1e-12;
    std::snprintf(buf, sizeof(buf),
                  "S(omega=gamma) = %.4e vs %.4e (rel %.3f <= 0.10); "
                  "gamma_from_spectrum(1000 Hz, 1e-4/Hz) = %.10f vs pi^2*100 (rel %.1e)",
                  s_est, s_exact, rel, g, g_rel);
    report(9, "spectrum pipeline", ok, buf);
}

// --- C10: invariant suite + mutation detection --------------------------------
void criterion_10() {
    bool suite_ok = true;
    for (const auto& r : run_invariant_suite())
        suite_ok = suite_ok && r.passed;

    TrapModel m = fig4_model();

    // sign error injected into the heating generator: flip one upward rate
    auto heat = build_heating_generator(m);
    heat.entry(12, -2) = -heat.entry(12, -2);
    const bool heat_caught = !check_generator_signs(heat, "heating").passed ||
                             !check_heating_column_sums(heat, m).passed;

    // sign error injected into the cooling generator: flip one downward rate
    auto cool = build_cooling_generator(m);
    cool.entry(9, +1) = -cool.entry(9, +1);
    const bool cool_caught = !check_cooling_detailed_balance(cool, m).passed;

    const bool ok = suite_ok && heat_caught && cool_caught;
    std::snprintf(buf, sizeof(buf),
                  "pristine suite %s; heating sign error %s; cooling sign error %s "
                  "(detailed balance)",
                  suite_ok ? "all pass" : "FAILED", heat_caught ? "caught" : "MISSED",
                  cool_caught ? "caught" : "MISSED");
    report(10, "invariant suite", ok, buf);
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    criterion_1();
    criterion_2();
    const auto big = big_heating_run();
    criterion_3(big);
    criterion_4(big);
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    std::printf("%d/10 criteria passed\n", 10 - failures);
    return failures;
}
