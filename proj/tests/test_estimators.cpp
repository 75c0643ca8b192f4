#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "aggstat/design.hpp"
#include "aggstat/errors.hpp"
#include "aggstat/estimators.hpp"
#include "aggstat/random.hpp"

using aggstat::ChannelDesign;
using aggstat::MixtureEstimate;
using aggstat::NonIdentifiableError;
using aggstat::RandomSource;

TEST_CASE("mean_from_total divides the basket total by the item count") {
    CHECK(aggstat::mean_from_total(1.30, 5) == 0.26);
    CHECK(aggstat::mean_from_total(27.0, 100) == 0.27);
    CHECK_THROWS_AS(aggstat::mean_from_total(1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(aggstat::mean_from_total(1.0, -3), std::invalid_argument);
}

TEST_CASE("population variance of the five-sample worked example is 0.00056") {
    const std::vector<double> weights = {0.25, 0.3, 0.27, 0.23, 0.25};
    CHECK(aggstat::population_variance(weights) == Catch::Approx(0.00056).margin(1e-12));
}

TEST_CASE("population variance uses denominator n") {
    // Two points a, b: mean (a+b)/2, both deviations (a-b)/2, variance (a-b)^2/4.
    const std::vector<double> two = {1.0, 3.0};
    CHECK(aggstat::population_variance(two) == Catch::Approx(1.0).margin(1e-15));
    const std::vector<double> one = {7.0};
    CHECK(aggstat::population_variance(one) == 0.0);
    CHECK_THROWS_AS(aggstat::population_variance(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("population variance is translation invariant and scales quadratically") {
    RandomSource rng(31, 0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> xs(10), shifted(10), scaled(10);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            xs[i] = rng.normal(0.0, 1.0);
            shifted[i] = xs[i] + 100.0;
            scaled[i] = 3.0 * xs[i];
        }
        const double v = aggstat::population_variance(xs);
        CHECK(std::abs(aggstat::population_variance(shifted) - v) < 1e-12);
        CHECK(std::abs(aggstat::population_variance(scaled) - 9.0 * v) < 1e-12);
    }
}

TEST_CASE("two-sigma interval matches the worked example") {
    const aggstat::Interval iv = aggstat::two_sigma_interval(0.26, 0.00056);
    CHECK(iv.lo == Catch::Approx(0.26 - 2.0 * std::sqrt(0.00056)).margin(1e-15));
    CHECK(iv.hi == Catch::Approx(0.26 + 2.0 * std::sqrt(0.00056)).margin(1e-15));
    CHECK(iv.lo == Catch::Approx(0.2126714).margin(5e-8));
    CHECK(iv.hi == Catch::Approx(0.3073286).margin(5e-8));
    CHECK_THROWS_AS(aggstat::two_sigma_interval(0.0, -1.0), std::invalid_argument);
}

TEST_CASE("paired variance estimate equals the squared gap over 2n") {
    CHECK(aggstat::paired_variance_estimate(27.0, 28.0, 100) == Catch::Approx(0.005).margin(1e-15));
    CHECK(aggstat::paired_variance_estimate(28.0, 27.0, 100) ==
          aggstat::paired_variance_estimate(27.0, 28.0, 100));
    CHECK(aggstat::paired_variance_estimate(5.0, 5.0, 10) == 0.0);
    CHECK_THROWS_AS(aggstat::paired_variance_estimate(1.0, 2.0, 0), std::invalid_argument);
}

TEST_CASE("paired variance is unbiased with MSE 2 v^2 at any n") {
    // T1 - T2 ~ Normal(0, 2 n v), so vhat = (T1-T2)^2 / (2n) = v * chi^2_1.
    const double v = 0.0005;
    for (std::int64_t n : {10LL, 100LL, 10000LL}) {
        RandomSource rng(32, static_cast<std::uint64_t>(n));
        const std::size_t reps = 50000;
        double sum = 0.0, sumsq_err = 0.0;
        for (std::size_t i = 0; i < reps; ++i) {
            const double gap = std::sqrt(2.0 * static_cast<double>(n) * v) * rng.standard_normal();
            const double vhat = aggstat::paired_variance_estimate(gap, 0.0, n);
            sum += vhat;
            const double err = vhat - v;
            sumsq_err += err * err;
        }
        const double mean = sum / reps;
        const double mse = sumsq_err / reps;
        // SE(mean) = sqrt(2 v^2 / R); SE(mse)/mse = sqrt(56/R)/2 = 1.7% here.
        CHECK(std::abs(mean - v) < 4.0 * std::sqrt(2.0 * v * v / reps));
        CHECK(std::abs(mse - 2.0 * v * v) < 0.10 * 2.0 * v * v);
    }
}

TEST_CASE("solve_two_group inverts a diagonal design exactly") {
    const ChannelDesign d({{2, 0}, {0, 3}});
    const MixtureEstimate est = aggstat::solve_two_group(d, 0.52, 0.90);
    CHECK(est.estimates[0] == Catch::Approx(0.26).margin(1e-15));
    CHECK(est.estimates[1] == Catch::Approx(0.30).margin(1e-15));
}

TEST_CASE("solve_two_group recovers the means from noiseless balanced totals") {
    const ChannelDesign d({{60, 40}, {40, 60}});
    // Forward totals for means (0.25, 0.30).
    const double t1 = 60 * 0.25 + 40 * 0.30; // 27
    const double t2 = 40 * 0.25 + 60 * 0.30; // 28
    const MixtureEstimate est = aggstat::solve_two_group(d, t1, t2);
    CHECK(est.estimates[0] == Catch::Approx(0.25).margin(1e-12));
    CHECK(est.estimates[1] == Catch::Approx(0.30).margin(1e-12));
}

TEST_CASE("solve_two_group refuses singular designs by exact determinant") {
    const ChannelDesign ones({{1, 1}, {1, 1}});
    CHECK_THROWS_MATCHES(aggstat::solve_two_group(ones, 1.0, 1.0), NonIdentifiableError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("determinant")));
    const ChannelDesign half({{50, 50}, {50, 50}});
    CHECK_THROWS_AS(aggstat::solve_two_group(half, 1.0, 1.0), NonIdentifiableError);
    const ChannelDesign wrong({{1, 2, 3}, {4, 5, 6}});
    CHECK_THROWS_AS(aggstat::solve_two_group(wrong, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("least squares weights channels by 1/n") {
    // One group, rows of 1 and 4 items: weights 1 and 1/4 give (t1+t2)/5.
    // Unweighted least squares would give (t1 + 4 t2)/17 instead.
    const ChannelDesign d({{1}, {4}});
    const std::vector<double> totals = {2.0, 3.0};
    const MixtureEstimate est = aggstat::least_squares_unmix(d, totals);
    REQUIRE(est.estimates.size() == 1);
    CHECK(est.estimates[0] == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("least squares equals the exact solve on square two-group systems") {
    RandomSource rng(33, 0);
    int tested = 0;
    while (tested < 50) {
        std::vector<std::vector<std::int64_t>> counts(2, std::vector<std::int64_t>(2));
        for (auto& row : counts)
            for (auto& c : row)
                c = static_cast<std::int64_t>(rng.next_u64() % 50);
        if (counts[0][0] + counts[0][1] == 0 || counts[1][0] + counts[1][1] == 0)
            continue;
        if (counts[0][0] * counts[1][1] - counts[1][0] * counts[0][1] == 0)
            continue;
        const ChannelDesign d(counts);
        const double t1 = rng.normal(10.0, 5.0);
        const double t2 = rng.normal(10.0, 5.0);
        const MixtureEstimate direct = aggstat::solve_two_group(d, t1, t2);
        const std::vector<double> totals = {t1, t2};
        const MixtureEstimate wls = aggstat::least_squares_unmix(d, totals);
        REQUIRE(std::abs(direct.estimates[0] - wls.estimates[0]) < 1e-12);
        REQUIRE(std::abs(direct.estimates[1] - wls.estimates[1]) < 1e-12);
        ++tested;
    }
}

TEST_CASE("least squares recovers means exactly from noiseless stacked totals") {
    const ChannelDesign d({{60, 40}, {40, 60}, {25, 75}, {75, 25}});
    const double a = 0.25, o = 0.30;
    std::vector<double> totals;
    for (const auto& row : d.counts())
        totals.push_back(static_cast<double>(row[0]) * a + static_cast<double>(row[1]) * o);
    const MixtureEstimate est = aggstat::least_squares_unmix(d, totals);
    CHECK(est.estimates[0] == Catch::Approx(a).margin(1e-12));
    CHECK(est.estimates[1] == Catch::Approx(o).margin(1e-12));
}

TEST_CASE("least squares is linear in the totals") {
    const ChannelDesign d({{60, 40}, {40, 60}, {25, 75}});
    RandomSource rng(34, 0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> t(3), delta(2);
        for (auto& x : t)
            x = rng.normal(20.0, 5.0);
        for (auto& x : delta)
            x = rng.normal(0.0, 1.0);
        // Shift totals by M * delta: estimates shift by delta exactly.
        std::vector<double> shifted = t;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                shifted[i] += static_cast<double>(d.count(i, j)) * delta[j];
        const auto base = aggstat::least_squares_unmix(d, t);
        const auto moved = aggstat::least_squares_unmix(d, shifted);
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(std::abs(moved.estimates[j] - base.estimates[j] - delta[j]) < 1e-10);

        // Scaling totals scales estimates.
        std::vector<double> doubled = t;
        for (auto& x : doubled)
            x *= 2.0;
        const auto scaled = aggstat::least_squares_unmix(d, doubled);
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(std::abs(scaled.estimates[j] - 2.0 * base.estimates[j]) < 1e-10);
    }
}

TEST_CASE("least squares rejects unidentifiable systems") {
    const std::vector<double> t2 = {1.0, 2.0};
    const std::vector<double> t3 = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(aggstat::least_squares_unmix(ChannelDesign({{1, 2}}), std::vector<double>{1.0}),
                    NonIdentifiableError);
    CHECK_THROWS_AS(aggstat::least_squares_unmix(ChannelDesign({{1, 1}, {2, 2}, {3, 3}}), t3),
                    NonIdentifiableError);
    CHECK_THROWS_AS(aggstat::least_squares_unmix(ChannelDesign({{1, 1}, {0, 0}}), t2),
                    std::invalid_argument); // empty channel
    CHECK_THROWS_AS(aggstat::least_squares_unmix(ChannelDesign({{1, 1}, {1, 2}}), t3),
                    std::invalid_argument); // totals length mismatch
}

TEST_CASE("aggregate report validates its totals length") {
    const ChannelDesign d({{1, 1}, {1, 2}});
    CHECK_NOTHROW(aggstat::AggregateReport(d, {1.0, 2.0}));
    CHECK_THROWS_AS(aggstat::AggregateReport(d, {1.0}), std::invalid_argument);
    const aggstat::AggregateReport report(d, {3.0, 4.0});
    const MixtureEstimate from_report = aggstat::least_squares_unmix(report);
    const std::vector<double> totals = {3.0, 4.0};
    const MixtureEstimate from_span = aggstat::least_squares_unmix(d, totals);
    CHECK(from_report.estimates == from_span.estimates);
}
