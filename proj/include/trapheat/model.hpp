#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace trapheat {

// Numerical tolerances shared by the distribution invariants.
inline constexpr double kNegTolerance = 1e-12;   // entries below -kNegTolerance are invalid
inline constexpr double kMassTolerance = 1e-9;   // total mass may exceed 1 by at most this

/// Physical parameters of the truncated trap ladder. Rates are in 1/s.
/// gamma_cool == 0 disables the bath entirely.
struct TrapModel {
    int levels = 100;        // number of bound levels retained, indexed 0..levels-1
    double gamma_heat = 0.0; // intensity-noise heating rate constant
    double gamma_cool = 0.0; // bath coupling rate
    double nbar = 0.0;       // bath mean excitation
};

inline void validate(const TrapModel& model) {
    if (model.levels < 3)
        throw std::invalid_argument("TrapModel.levels: must be >= 3, got " +
                                    std::to_string(model.levels));
    if (!(model.gamma_heat >= 0.0) || !std::isfinite(model.gamma_heat))
        throw std::invalid_argument("TrapModel.gamma_heat: must be finite and >= 0");
    if (!(model.gamma_cool >= 0.0) || !std::isfinite(model.gamma_cool))
        throw std::invalid_argument("TrapModel.gamma_cool: must be finite and >= 0");
    if (!(model.nbar >= 0.0) || !std::isfinite(model.nbar))
        throw std::invalid_argument("TrapModel.nbar: must be finite and >= 0");
}

/// Probability vector over trap levels 0..L-1 at a given time.
/// Sub-normalized: 1 - sum(probs) is the probability the atom has escaped.
struct LevelDistribution {
    std::vector<double> probs;
    double time = 0.0;

    std::size_t size() const { return probs.size(); }
};

inline void check_distribution(const LevelDistribution& dist) {
    if (dist.probs.empty())
        throw std::invalid_argument("LevelDistribution: empty probability vector");
    double sum = 0.0;
    for (double p : dist.probs) {
        if (p < -kNegTolerance || !std::isfinite(p))
            throw std::invalid_argument("LevelDistribution: entry below negativity tolerance");
        sum += p;
    }
    if (sum > 1.0 + kMassTolerance)
        throw std::invalid_argument("LevelDistribution: total mass exceeds 1 beyond tolerance");
}

/// Banded generator A of the master equation dP/dt = A P.
/// Offsets -2..+2 cover both the two-level heating jumps and the
/// one-level bath jumps. Storage is row-indexed: band(k)[i] = A(i, i+k).
/// Off-diagonal entries are jump rates (>= 0); diagonals are total loss
/// rates (<= 0). Columns whose upward flux crosses the truncation edge
/// sum to a negative value: that flux is absorbed (the atom escaped).
class RateGenerator {
public:
    static constexpr int kMinOffset = -2;
    static constexpr int kMaxOffset = 2;

    RateGenerator() = default;
    explicit RateGenerator(int size) : size_(size) {
        if (size < 3)
            throw std::invalid_argument("RateGenerator: size must be >= 3");
        for (auto& b : bands_) b.assign(static_cast<std::size_t>(size), 0.0);
    }

    int size() const { return size_; }

    /// Mutable access to A(row, row+offset). Out-of-band indices are a logic error.
    double& entry(int row, int offset) {
        return bands_[static_cast<std::size_t>(offset - kMinOffset)][static_cast<std::size_t>(row)];
    }

    /// A(row, col), zero outside the band.
    double at(int row, int col) const {
        const int k = col - row;
        if (row < 0 || row >= size_ || col < 0 || col >= size_ || k < kMinOffset || k > kMaxOffset)
            return 0.0;
        return bands_[static_cast<std::size_t>(k - kMinOffset)][static_cast<std::size_t>(row)];
    }

    const std::vector<double>& band(int offset) const {
        return bands_[static_cast<std::size_t>(offset - kMinOffset)];
    }

    /// out = A x over rows [row_begin, row_end). Rows outside are left untouched.
    void apply(const double* x, double* out, int row_begin, int row_end) const {
        const double* m2 = bands_[0].data();
        const double* m1 = bands_[1].data();
        const double* d0 = bands_[2].data();
        const double* p1 = bands_[3].data();
        const double* p2 = bands_[4].data();
        const int n = size_;
        row_begin = std::max(row_begin, 0);
        row_end = std::min(row_end, n);
        int i = row_begin;
        for (; i < std::min(row_end, 2); ++i) {
            double acc = d0[i] * x[i];
            if (i >= 1) acc += m1[i] * x[i - 1];
            if (i + 1 < n) acc += p1[i] * x[i + 1];
            if (i + 2 < n) acc += p2[i] * x[i + 2];
            out[i] = acc;
        }
        const int bulk_end = std::min(row_end, n - 2);
        for (; i < bulk_end; ++i) {
            out[i] = m2[i] * x[i - 2] + m1[i] * x[i - 1] + d0[i] * x[i] +
                     p1[i] * x[i + 1] + p2[i] * x[i + 2];
        }
        for (; i < row_end; ++i) {
            double acc = m2[i] * x[i - 2] + m1[i] * x[i - 1] + d0[i] * x[i];
            if (i + 1 < n) acc += p1[i] * x[i + 1];
            if (i + 2 < n) acc += p2[i] * x[i + 2];
            out[i] = acc;
        }
    }

    void apply(const double* x, double* out) const { apply(x, out, 0, size_); }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> out(x.size(), 0.0);
        apply(x.data(), out.data());
        return out;
    }

    /// Sum of column j (the net outflow rate of level j; <= 0 means absorbing loss).
    double column_sum(int j) const {
        double s = 0.0;
        for (int k = kMinOffset; k <= kMaxOffset; ++k) {
            const int row = j - k;
            if (row >= 0 && row < size_) s += at(row, j);
        }
        return s;
    }

    std::vector<double> column_sums() const {
        std::vector<double> sums(static_cast<std::size_t>(size_));
        for (int j = 0; j < size_; ++j) sums[static_cast<std::size_t>(j)] = column_sum(j);
        return sums;
    }

    double max_abs_diagonal() const {
        double m = 0.0;
        for (double d : bands_[2]) m = std::max(m, std::abs(d));
        return m;
    }

private:
    int size_ = 0;
    std::array<std::vector<double>, 5> bands_{};  // offsets -2,-1,0,+1,+2
};

/// Heating generator: two-level jumps driven by spring-constant noise.
/// Column n carries upward rate (G/8)(n+2)(n+1) and downward rate
/// (G/8)n(n-1); upward flux out of columns L-2 and L-1 has no destination
/// row and is absorbed. The n(n-1) factor vanishes at n = 0,1, so the
/// lower edge needs no special casing.
inline RateGenerator build_heating_generator(const TrapModel& model) {
    validate(model);
    RateGenerator gen(model.levels);
    const int L = model.levels;
    const double g8 = model.gamma_heat / 8.0;
    for (int n = 0; n < L; ++n) {
        const double up = g8 * static_cast<double>(n + 2) * static_cast<double>(n + 1);
        const double down = g8 * static_cast<double>(n) * static_cast<double>(n - 1);
        gen.entry(n, 0) -= up + down;
        if (n + 2 < L) gen.entry(n + 2, -2) += up;
        if (n - 2 >= 0) gen.entry(n - 2, +2) += down;
    }
    return gen;
}

/// Bath (cooling) generator: one-level jumps with upward rate
/// Gc*nbar*(n+1) and downward rate Gc*(nbar+1)*n out of level n.
/// The upward flux out of column L-1 is absorbed, matching the heating
/// convention at the truncation edge.
inline RateGenerator build_cooling_generator(const TrapModel& model) {
    validate(model);
    RateGenerator gen(model.levels);
    const int L = model.levels;
    const double gc = model.gamma_cool;
    for (int n = 0; n < L; ++n) {
        const double up = gc * model.nbar * static_cast<double>(n + 1);
        const double down = gc * (model.nbar + 1.0) * static_cast<double>(n);
        gen.entry(n, 0) -= up + down;
        if (n + 1 < L) gen.entry(n + 1, -1) += up;
        if (n - 1 >= 0) gen.entry(n - 1, +1) += down;
    }
    return gen;
}

/// Entrywise sum of two generators over the same ladder.
inline RateGenerator combine_generators(const RateGenerator& a, const RateGenerator& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("combine_generators: size mismatch (" +
                                    std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    RateGenerator out(a.size());
    for (int k = RateGenerator::kMinOffset; k <= RateGenerator::kMaxOffset; ++k) {
        for (int i = 0; i < a.size(); ++i) {
            if (i + k < 0 || i + k >= a.size()) continue;
            out.entry(i, k) = a.band(k)[static_cast<std::size_t>(i)] +
                              b.band(k)[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

/// Initial condition: probability split evenly between levels n0 and n0+1.
inline LevelDistribution initial_distribution(const TrapModel& model, int n0) {
    validate(model);
    if (n0 < 0 || n0 > model.levels - 2)
        throw std::invalid_argument("initial_distribution: n0 must be in [0, levels-2], got " +
                                    std::to_string(n0));
    LevelDistribution dist;
    dist.probs.assign(static_cast<std::size_t>(model.levels), 0.0);
    dist.probs[static_cast<std::size_t>(n0)] = 0.5;
    dist.probs[static_cast<std::size_t>(n0 + 1)] = 0.5;
    dist.time = 0.0;
    return dist;
}

}  // namespace trapheat
