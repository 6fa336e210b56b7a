#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "trapheat/model.hpp"

namespace trapheat {

// Below this surviving probability the conditional moments are reported as
// undefined instead of dividing.
inline constexpr double kSurvivalFloor = 1e-12;

/// Total probability still in the trap. Entries inside the negativity
/// tolerance are treated as zero.
inline double survival(const LevelDistribution& dist) {
    check_distribution(dist);
    double s = 0.0;
    for (double p : dist.probs)
        if (p > 0.0) s += p;
    return s;
}

/// Mean and standard deviation of the level index over the surviving
/// population. `defined` is false when essentially nothing survives;
/// mean/std_dev are NaN in that case.
struct ConditionalMoments {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double std_dev = std::numeric_limits<double>::quiet_NaN();
    bool defined = false;
};

inline ConditionalMoments conditional_moments(const LevelDistribution& dist) {
    check_distribution(dist);
    double s = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t n = 0; n < dist.probs.size(); ++n) {
        const double p = dist.probs[n] > 0.0 ? dist.probs[n] : 0.0;
        const double x = static_cast<double>(n);
        s += p;
        m1 += x * p;
        m2 += x * x * p;
    }
    if (s < kSurvivalFloor) return {};
    ConditionalMoments out;
    out.mean = m1 / s;
    const double var = m2 / s - out.mean * out.mean;
    out.std_dev = var > 0.0 ? std::sqrt(var) : 0.0;
    out.defined = true;
    return out;
}

/// Per-sample reductions of an evolution: the quantities one plots.
/// escape_rate is the centered finite difference of -survival, in 1/s.
struct ObservableSeries {
    std::vector<double> times;
    std::vector<double> survival;
    std::vector<double> mean_n;
    std::vector<double> std_n;
    std::vector<double> escape_rate;

    std::size_t size() const { return times.size(); }
};

inline ObservableSeries reduce_series(const std::vector<LevelDistribution>& snapshots) {
    if (snapshots.empty())
        throw std::invalid_argument("reduce_series: no snapshots");
    for (std::size_t i = 1; i < snapshots.size(); ++i)
        if (!(snapshots[i].time > snapshots[i - 1].time))
            throw std::invalid_argument("reduce_series: snapshot times must be increasing");

    ObservableSeries series;
    const std::size_t n = snapshots.size();
    series.times.reserve(n);
    series.survival.reserve(n);
    series.mean_n.reserve(n);
    series.std_n.reserve(n);
    series.escape_rate.assign(n, 0.0);
    for (const auto& snap : snapshots) {
        series.times.push_back(snap.time);
        series.survival.push_back(survival(snap));
        const auto mom = conditional_moments(snap);
        series.mean_n.push_back(mom.mean);
        series.std_n.push_back(mom.std_dev);
    }
    if (n >= 2) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t a = i == 0 ? 0 : i - 1;
            const std::size_t b = i + 1 == n ? n - 1 : i + 1;
            series.escape_rate[i] =
                -(series.survival[b] - series.survival[a]) / (series.times[b] - series.times[a]);
        }
    }
    return series;
}

}  // namespace trapheat
