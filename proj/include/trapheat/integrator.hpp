#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trapheat/model.hpp"

namespace trapheat {

/// Uniform output grid for evolve(). Internal integration steps are finer.
struct TimeGrid {
    double t_start = 0.0;
    double t_end = 0.0;
    int n_samples = 2;

    std::vector<double> times() const {
        std::vector<double> ts(static_cast<std::size_t>(n_samples));
        const double dt = (t_end - t_start) / static_cast<double>(n_samples - 1);
        for (int i = 0; i < n_samples; ++i)
            ts[static_cast<std::size_t>(i)] = t_start + dt * static_cast<double>(i);
        ts.back() = t_end;
        return ts;
    }
};

inline void validate(const TimeGrid& grid) {
    if (!(grid.t_start >= 0.0) || !(grid.t_end > grid.t_start))
        throw std::invalid_argument("TimeGrid: require t_end > t_start >= 0");
    if (grid.n_samples < 2)
        throw std::invalid_argument("TimeGrid: n_samples must be >= 2");
}

struct IntegratorConfig {
    // Unset means the spectral default 0.1 / max|diagonal| of the generator.
    std::optional<double> max_step{};
    double neg_tolerance = kNegTolerance;
    double mass_tolerance = kMassTolerance;
};

inline void validate(const IntegratorConfig& cfg) {
    if (cfg.max_step && !(*cfg.max_step > 0.0))
        throw std::invalid_argument("IntegratorConfig.max_step: must be > 0");
    if (!(cfg.neg_tolerance > 0.0))
        throw std::invalid_argument("IntegratorConfig.neg_tolerance: must be > 0");
    if (!(cfg.mass_tolerance > 0.0))
        throw std::invalid_argument("IntegratorConfig.mass_tolerance: must be > 0");
}

class integration_error : public std::runtime_error {
public:
    integration_error(const std::string& what, double t)
        : std::runtime_error(what + " at t = " + std::to_string(t) + " s"), time_(t) {}
    double time() const { return time_; }

private:
    double time_;
};

namespace detail {

// Fixed-step classical RK4 stepper over the banded generator. Tracks the
// index window where the state is nonzero so that large ladders whose tail
// is still identically zero cost nothing; arithmetic outside the window
// would produce exact zeros, so skipping it leaves results bit-identical.
class Rk4Stepper {
public:
    Rk4Stepper(const RateGenerator& gen, std::vector<double> state)
        : gen_(gen),
          x_(std::move(state)),
          k1_(x_.size(), 0.0),
          k2_(x_.size(), 0.0),
          k3_(x_.size(), 0.0),
          k4_(x_.size(), 0.0),
          y_(x_.size(), 0.0) {
        lo_ = gen.size();
        hi_ = 0;
        for (int i = 0; i < gen.size(); ++i) {
            if (x_[static_cast<std::size_t>(i)] != 0.0) {
                lo_ = std::min(lo_, i);
                hi_ = std::max(hi_, i + 1);
            }
        }
        if (lo_ >= hi_) { lo_ = 0; hi_ = 0; }
    }

    const std::vector<double>& state() const { return x_; }

    // Advance by n_steps equal steps of size h. One RK4 step can extend the
    // support by at most 8 levels (four band applications of width 2), so
    // each step works on the window [lo-8, hi+8) and the window is then
    // tightened to the actual nonzero extent. The window never moves past
    // previously written rows, so the scratch buffers outside it hold their
    // initial zeros and every skipped row is an exact zero.
    void advance(double h, long long n_steps) {
        const int n = gen_.size();
        for (long long s = 0; s < n_steps; ++s) {
            const int lo0 = std::max(lo_ - 8, 0);
            const int hi0 = std::min(hi_ + 8, n);
            gen_.apply(x_.data(), k1_.data(), lo0, hi0);
            axpy(lo0, hi0, x_, 0.5 * h, k1_, y_);
            gen_.apply(y_.data(), k2_.data(), lo0, hi0);
            axpy(lo0, hi0, x_, 0.5 * h, k2_, y_);
            gen_.apply(y_.data(), k3_.data(), lo0, hi0);
            axpy(lo0, hi0, x_, h, k3_, y_);
            gen_.apply(y_.data(), k4_.data(), lo0, hi0);
            const double w = h / 6.0;
            for (int i = lo0; i < hi0; ++i) {
                const auto u = static_cast<std::size_t>(i);
                x_[u] += w * (k1_[u] + 2.0 * (k2_[u] + k3_[u]) + k4_[u]);
            }
            int nl = lo0;
            while (nl < lo_ && x_[static_cast<std::size_t>(nl)] == 0.0) ++nl;
            int nh = hi0;
            while (nh > hi_ && x_[static_cast<std::size_t>(nh - 1)] == 0.0) --nh;
            lo_ = nl;
            hi_ = nh;
        }
    }

private:
    static void axpy(int lo, int hi, const std::vector<double>& x, double a,
                     const std::vector<double>& k, std::vector<double>& out) {
        for (int i = lo; i < hi; ++i) {
            const auto u = static_cast<std::size_t>(i);
            out[u] = x[u] + a * k[u];
        }
    }

    const RateGenerator& gen_;
    std::vector<double> x_, k1_, k2_, k3_, k4_, y_;
    int lo_ = 0, hi_ = 0;
};

inline double resolve_max_step(const RateGenerator& gen, const IntegratorConfig& cfg) {
    if (cfg.max_step) return *cfg.max_step;
    const double d = gen.max_abs_diagonal();
    if (d == 0.0) return std::numeric_limits<double>::infinity();
    return 0.1 / d;
}

inline void check_sample(const std::vector<double>& x, double t, double prev_mass,
                         double& mass_out, const IntegratorConfig& cfg) {
    double mass = 0.0;
    double min_entry = 0.0;
    for (double p : x) {
        mass += p;
        min_entry = std::min(min_entry, p);
    }
    if (min_entry < -cfg.neg_tolerance)
        throw integration_error("integration produced entry below negativity tolerance (" +
                                    std::to_string(min_entry) + ")",
                                t);
    if (mass > prev_mass + cfg.mass_tolerance)
        throw integration_error("integration produced mass growth beyond tolerance", t);
    mass_out = mass;
}

}  // namespace detail

/// Propagate `init` through the sorted output times (all >= init.time),
/// returning one snapshot per time. Sub-stochasticity and positivity are
/// checked at every output sample. Deterministic: fixed-step RK4 with the
/// step count derived from the grid and cfg only.
inline std::vector<LevelDistribution> evolve_at_times(const RateGenerator& gen,
                                                      const LevelDistribution& init,
                                                      const std::vector<double>& times,
                                                      const IntegratorConfig& cfg = {}) {
    validate(cfg);
    check_distribution(init);
    if (static_cast<int>(init.size()) != gen.size())
        throw std::invalid_argument("evolve: distribution size does not match generator");
    if (times.empty()) return {};
    double prev = init.time;
    for (double t : times) {
        if (t < prev)
            throw std::invalid_argument("evolve: output times must be sorted and >= init.time");
        prev = t;
    }

    const double max_step = detail::resolve_max_step(gen, cfg);
    detail::Rk4Stepper stepper(gen, init.probs);

    std::vector<LevelDistribution> out;
    out.reserve(times.size());
    double t_now = init.time;
    double prev_mass = 0.0;
    for (double p : init.probs) prev_mass += p;

    for (double t_target : times) {
        const double span = t_target - t_now;
        if (span > 0.0) {
            long long n_steps = 1;
            if (std::isfinite(max_step) && span > max_step) {
                const double req = std::ceil(span / max_step);
                if (req > 9e15)
                    throw integration_error("step-size underflow: required step count overflows",
                                            t_now);
                n_steps = static_cast<long long>(req);
            }
            const double h = span / static_cast<double>(n_steps);
            if (!(h > 0.0))
                throw integration_error("step-size underflow", t_now);
            stepper.advance(h, n_steps);
            t_now = t_target;
        }
        double mass = prev_mass;
        detail::check_sample(stepper.state(), t_target, prev_mass, mass, cfg);
        prev_mass = mass;
        out.push_back(LevelDistribution{stepper.state(), t_target});
    }
    return out;
}

inline std::vector<LevelDistribution> evolve(const RateGenerator& gen,
                                             const LevelDistribution& init,
                                             const TimeGrid& grid,
                                             const IntegratorConfig& cfg = {}) {
    validate(grid);
    if (grid.t_start < init.time)
        throw std::invalid_argument("evolve: grid starts before the initial time");
    return evolve_at_times(gen, init, grid.times(), cfg);
}

struct StationaryResult {
    LevelDistribution distribution;  // normalized long-time limit
    double leaked_mass = 0.0;        // total probability absorbed while converging
    bool leak_flagged = false;       // leaked_mass > 1e-6
};

/// Long-time limit of dP/dt = A P, renormalized. The state is evolved in
/// doubling chunks until the renormalized shape changes by less than
/// `shape_rate_tol` per unit time in sup norm. Intended for generators with
/// a near-kernel (cooling-only ladders); the probability absorbed at the
/// truncation edge during the computation is reported and flagged when it
/// exceeds 1e-6.
inline StationaryResult stationary_distribution(const RateGenerator& gen,
                                                double shape_rate_tol = 1e-12,
                                                int max_chunks = 400) {
    const int n = gen.size();
    const double scale = gen.max_abs_diagonal();
    if (scale == 0.0) {
        // Zero generator: everything is stationary; uniform start is its own limit.
        LevelDistribution uniform;
        uniform.probs.assign(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
        return StationaryResult{std::move(uniform), 0.0, false};
    }

    std::vector<double> shape(static_cast<std::size_t>(n), 0.0);
    shape[0] = 1.0;  // mass at the bottom level: minimal transient leakage
    double survival_product = 1.0;
    double chunk = 1.0 / scale;
    // Only the fixed point matters here, so step at the stability bound
    // rather than the tighter accuracy default.
    const double max_step = 1.0 / scale;

    for (int iter = 0; iter < max_chunks; ++iter) {
        if (chunk / max_step > 1e8)
            throw std::runtime_error(
                "stationary_distribution: no stationary state within iteration budget");
        detail::Rk4Stepper stepper(gen, shape);
        long long n_steps = static_cast<long long>(std::ceil(chunk / max_step));
        n_steps = std::max<long long>(n_steps, 1);
        stepper.advance(chunk / static_cast<double>(n_steps), n_steps);

        double mass = 0.0;
        for (double p : stepper.state()) mass += p;
        if (!(mass > 0.0))
            throw std::runtime_error("stationary_distribution: state fully absorbed");
        survival_product *= mass;

        std::vector<double> next(stepper.state());
        for (double& p : next) p = std::max(p, 0.0) / mass;

        double sup = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i)
            sup = std::max(sup, std::abs(next[i] - shape[i]));
        shape = std::move(next);
        if (sup / chunk < shape_rate_tol) {
            const double leaked = 1.0 - survival_product;
            LevelDistribution dist{std::move(shape), 0.0};
            return StationaryResult{std::move(dist), leaked, leaked > 1e-6};
        }
        chunk *= 2.0;
    }
    throw std::runtime_error("stationary_distribution: no stationary state within iteration budget");
}

struct MomentPoint {
    double time = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

/// Closed two-moment system of the untruncated ladder (no escape).
///
/// Summing n and n^2 against the heating master equation gives
///   d<n>/dt   = Ge (<n> + 1/2)
///   d<n2>/dt  = Ge (3 <n2> + 2 <n> + 1)
/// and against the bath equation (moment algebra over the n+-1 jumps,
/// checked against the geometric fixed point <n2> = 2 nbar^2 + nbar)
///   d<n>/dt  += Gc (nbar - <n>)
///   d<n2>/dt += Gc (-2 <n2> + (4 nbar + 1) <n> + nbar).
inline std::vector<MomentPoint> moment_oracle(const TrapModel& model, double n0_mean,
                                              double n0_var, const TimeGrid& grid) {
    validate(model);
    validate(grid);
    const double ge = model.gamma_heat;
    const double gc = model.gamma_cool;
    const double nb = model.nbar;

    auto deriv = [&](double m, double s, double& dm, double& ds) {
        dm = ge * (m + 0.5) + gc * (nb - m);
        ds = ge * (3.0 * s + 2.0 * m + 1.0) + gc * (-2.0 * s + (4.0 * nb + 1.0) * m + nb);
    };

    const double rate_scale = 3.0 * ge + 2.0 * gc;
    const auto times = grid.times();
    std::vector<MomentPoint> out;
    out.reserve(times.size());

    double m = n0_mean;
    double s = n0_var + n0_mean * n0_mean;
    double t_now = times.front();
    out.push_back(MomentPoint{t_now, m, n0_var});

    for (std::size_t k = 1; k < times.size(); ++k) {
        const double span = times[k] - t_now;
        long long n_steps = 1;
        if (rate_scale > 0.0)
            n_steps = std::max<long long>(1, static_cast<long long>(
                                                 std::ceil(span * rate_scale / 0.002)));
        const double h = span / static_cast<double>(n_steps);
        for (long long i = 0; i < n_steps; ++i) {
            double k1m, k1s, k2m, k2s, k3m, k3s, k4m, k4s;
            deriv(m, s, k1m, k1s);
            deriv(m + 0.5 * h * k1m, s + 0.5 * h * k1s, k2m, k2s);
            deriv(m + 0.5 * h * k2m, s + 0.5 * h * k2s, k3m, k3s);
            deriv(m + h * k3m, s + h * k3s, k4m, k4s);
            m += h / 6.0 * (k1m + 2.0 * (k2m + k3m) + k4m);
            s += h / 6.0 * (k1s + 2.0 * (k2s + k3s) + k4s);
        }
        t_now = times[k];
        out.push_back(MomentPoint{t_now, m, s - m * m});
    }
    return out;
}

}  // namespace trapheat
