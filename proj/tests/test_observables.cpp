#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "trapheat/integrator.hpp"
#include "trapheat/model.hpp"
#include "trapheat/observables.hpp"

using namespace trapheat;

namespace {

LevelDistribution make_dist(std::vector<double> probs, double t = 0.0) {
    return LevelDistribution{std::move(probs), t};
}

}  // namespace

TEST_CASE("survival sums the clamped entries") {
    TrapModel m;
    m.levels = 30;
    m.gamma_heat = 1.0;
    CHECK(survival(initial_distribution(m, 7)) == 1.0);
    CHECK(survival(make_dist(std::vector<double>(30, 0.0))) == 0.0);
    // entries inside the negativity tolerance count as zero
    CHECK(survival(make_dist({0.5, -5e-13, 0.5})) == 1.0);
}

TEST_CASE("conditional moments of simple distributions") {
    SECTION("two-point split") {
        std::vector<double> p(100, 0.0);
        p[45] = 0.5;
        p[46] = 0.5;
        const auto mom = conditional_moments(make_dist(p));
        REQUIRE(mom.defined);
        CHECK(mom.mean == Catch::Approx(45.5).epsilon(1e-14));
        CHECK(mom.std_dev == Catch::Approx(0.5).epsilon(1e-12));
    }
    SECTION("single level has zero width") {
        for (int k : {0, 3, 17}) {
            std::vector<double> p(20, 0.0);
            p[k] = 1.0;
            const auto mom = conditional_moments(make_dist(p));
            REQUIRE(mom.defined);
            CHECK(mom.mean == static_cast<double>(k));
            CHECK(mom.std_dev == 0.0);
        }
    }
}

TEST_CASE("conditional moments ignore the overall scale") {
    std::vector<double> p(50, 0.0);
    for (int n = 10; n < 30; ++n) p[n] = 0.05 * (1.0 + 0.1 * n);
    double norm = 0.0;
    for (double v : p) norm += v;
    for (double& v : p) v /= norm;
    const auto base = conditional_moments(make_dist(p));
    for (double c : {0.3, 1e-3, 1e-9}) {
        auto scaled = p;
        for (double& v : scaled) v *= c;
        const auto mom = conditional_moments(make_dist(scaled));
        REQUIRE(mom.defined);
        CHECK(mom.mean == Catch::Approx(base.mean).epsilon(1e-12));
        CHECK(mom.std_dev == Catch::Approx(base.std_dev).epsilon(1e-9));
    }
}

TEST_CASE("moments of the geometric bath distribution") {
    const double nbar = 10.0;
    const double q = nbar / (nbar + 1.0);

    SECTION("deep ladder reaches the closed-form values") {
        std::vector<double> p(400);
        double g = 1.0 / (nbar + 1.0);
        for (auto& v : p) {
            v = g;
            g *= q;
        }
        const auto mom = conditional_moments(make_dist(p));
        REQUIRE(mom.defined);
        CHECK(mom.mean == Catch::Approx(10.0).margin(1e-3));
        CHECK(mom.std_dev == Catch::Approx(std::sqrt(110.0)).margin(1e-3));
    }
    SECTION("100-level truncation shifts them visibly") {
        std::vector<double> p(100);
        double g = 1.0 / (nbar + 1.0);
        for (auto& v : p) {
            v = g;
            g *= q;
        }
        const auto mom = conditional_moments(make_dist(p));
        REQUIRE(mom.defined);
        // frozen exact sums of the truncated geometric
        CHECK(mom.mean == Catch::Approx(9.992742902).margin(1e-6));
        CHECK(mom.std_dev == Catch::Approx(10.453431853).margin(1e-6));
    }
}

TEST_CASE("moments become undefined when nothing survives") {
    std::vector<double> p(10, 0.0);
    p[4] = 5e-13;
    const auto mom = conditional_moments(make_dist(p));
    CHECK_FALSE(mom.defined);
    CHECK(std::isnan(mom.mean));
    CHECK(std::isnan(mom.std_dev));
}

TEST_CASE("reduce_series basics") {
    SECTION("single snapshot") {
        const auto series = reduce_series({make_dist({0.25, 0.75}, 0.5)});
        REQUIRE(series.size() == 1);
        CHECK(series.survival[0] == 1.0);
        CHECK(series.escape_rate[0] == 0.0);
    }
    SECTION("constant run has zero escape rate") {
        TrapModel m;
        m.levels = 25;
        const auto snaps =
            evolve(build_heating_generator(m), initial_distribution(m, 6), TimeGrid{0.0, 1.0, 7});
        const auto series = reduce_series(snaps);
        for (std::size_t i = 0; i < series.size(); ++i) {
            CHECK(series.survival[i] == 1.0);
            CHECK(series.escape_rate[i] == 0.0);
            CHECK(series.mean_n[i] == Catch::Approx(6.5));
        }
    }
    SECTION("unordered times rejected") {
        CHECK_THROWS_AS(reduce_series({make_dist({1.0}, 1.0), make_dist({1.0}, 0.5)}),
                        std::invalid_argument);
        CHECK_THROWS_AS(reduce_series({}), std::invalid_argument);
    }
}

TEST_CASE("escape rate is the centered difference of -survival") {
    // survival 1, 0.9, 0.7, 0.4 at t = 0, 1, 2, 3
    std::vector<LevelDistribution> snaps;
    const double s[] = {1.0, 0.9, 0.7, 0.4};
    for (int k = 0; k < 4; ++k) snaps.push_back(make_dist({s[k]}, static_cast<double>(k)));
    const auto series = reduce_series(snaps);
    CHECK(series.escape_rate[0] == Catch::Approx(0.1).epsilon(1e-12));   // one-sided
    CHECK(series.escape_rate[1] == Catch::Approx(0.15).epsilon(1e-12));  // centered
    CHECK(series.escape_rate[2] == Catch::Approx(0.25).epsilon(1e-12));
    CHECK(series.escape_rate[3] == Catch::Approx(0.3).epsilon(1e-12));   // one-sided
}

TEST_CASE("heating spreads the sharp start in under two milliseconds") {
    TrapModel m;
    m.levels = 100;
    m.gamma_heat = 1000.0 / 23.0;
    const auto snaps = evolve(build_heating_generator(m), initial_distribution(m, 45),
                              TimeGrid{0.0, 0.002, 5});
    const auto series = reduce_series(snaps);
    CHECK(series.std_n.front() == Catch::Approx(0.5).margin(1e-10));
    CHECK(series.std_n.back() >= 10.0);
    // frozen reference from the dense matrix-exponential solve
    CHECK(series.std_n.back() == Catch::Approx(14.054614).margin(1e-2));
    CHECK(series.survival.back() == Catch::Approx(0.988491858).margin(1e-4));
    // survival never increases along the run
    for (std::size_t i = 1; i < series.size(); ++i)
        CHECK(series.survival[i] <= series.survival[i - 1] + kMassTolerance);
}
