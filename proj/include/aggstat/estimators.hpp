#ifndef AGGSTAT_ESTIMATORS_HPP
#define AGGSTAT_ESTIMATORS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aggstat/design.hpp"
#include "aggstat/errors.hpp"
#include "aggstat/fisher.hpp"
#include "aggstat/linalg.hpp"

namespace aggstat {

// Observed basket totals paired with the design that produced them.
struct AggregateReport {
    ChannelDesign design;
    std::vector<double> totals;

    AggregateReport(ChannelDesign design_, std::vector<double> totals_)
        : design(std::move(design_)), totals(std::move(totals_)) {
        if (totals.size() != design.channels())
            throw std::invalid_argument("AggregateReport: one total per channel required");
    }
};

// Per-group mean-weight estimates recovered from aggregate totals.
struct MixtureEstimate {
    std::vector<double> estimates;
    std::optional<CRBMatrix> covariance_bound;
};

// Mean item weight from a single basket total: T/n.
inline double mean_from_total(double total, std::int64_t n) {
    if (n < 1)
        throw std::invalid_argument("mean_from_total: basket must contain at least one item");
    return total / static_cast<double>(n);
}

// Mean squared deviation from the sample mean, denominator n (not n-1).
inline double population_variance(std::span<const double> weights) {
    if (weights.empty())
        throw std::invalid_argument("population_variance: need at least one weight");
    double sum = 0.0;
    for (double w : weights)
        sum += w;
    const double mean = sum / static_cast<double>(weights.size());
    double sq = 0.0;
    for (double w : weights) {
        const double d = w - mean;
        sq += d * d;
    }
    return sq / static_cast<double>(weights.size());
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// The two-standard-deviations rule of thumb: mean +- 2*sqrt(variance).
inline Interval two_sigma_interval(double mean, double variance) {
    if (!(variance >= 0.0))
        throw std::invalid_argument("two_sigma_interval: variance must be >= 0");
    const double half_width = 2.0 * std::sqrt(variance);
    return Interval{mean - half_width, mean + half_width};
}

// Variance estimate from two baskets of n items each of one group:
// (T1 - T2)^2 / (2n). Unbiased, but its own squared error stalls at 2 v^2
// no matter how large n grows.
inline double paired_variance_estimate(double t1, double t2, std::int64_t n) {
    if (n < 1)
        throw std::invalid_argument("paired_variance_estimate: baskets must contain items");
    const double d = t1 - t2;
    return d * d / (2.0 * static_cast<double>(n));
}

// Solved form of the two-basket, two-group system
//   T1 ~ a1*aw + o1*ow
//   T2 ~ a2*aw + o2*ow
// giving aw = (o2 T1 - o1 T2)/(a1 o2 - a2 o1) and the mirrored expression
// for ow. Singularity is decided on the exact integer determinant.
inline MixtureEstimate solve_two_group(const ChannelDesign& d, double t1, double t2) {
    if (d.channels() != 2 || d.groups() != 2)
        throw std::invalid_argument("solve_two_group: design must be 2x2");
    const std::int64_t a1 = d.count(0, 0);
    const std::int64_t o1 = d.count(0, 1);
    const std::int64_t a2 = d.count(1, 0);
    const std::int64_t o2 = d.count(1, 1);
    const std::int64_t det = a1 * o2 - a2 * o1;
    if (det == 0)
        throw NonIdentifiableError(
            "solve_two_group: design determinant a1*o2 - a2*o1 = 0; the two "
            "group means cannot be separated from these totals");
    const double den = static_cast<double>(det);
    MixtureEstimate out;
    out.estimates = {
        (static_cast<double>(o2) * t1 - static_cast<double>(o1) * t2) / den,
        (-static_cast<double>(a2) * t1 + static_cast<double>(a1) * t2) / den,
    };
    return out;
}

// Weighted least squares over an m x k design (m >= k): minimizes
// sum_i (T_i - (M mu)_i)^2 / n_i, the maximum-likelihood weighting when
// every item shares a common variance v so that Var(T_i) = n_i v. Reduces
// to solve_two_group on square nonsingular 2x2 systems.
inline MixtureEstimate least_squares_unmix(const ChannelDesign& d, std::span<const double> totals) {
    const std::size_t m = d.channels();
    const std::size_t k = d.groups();
    if (totals.size() != m)
        throw std::invalid_argument("least_squares_unmix: one total per channel required");
    if (m < k)
        throw NonIdentifiableError("least_squares_unmix: fewer channels than groups");
    for (std::size_t i = 0; i < m; ++i)
        if (d.row_total(i) == 0)
            throw std::invalid_argument("least_squares_unmix: channel " + std::to_string(i) +
                                        " is empty (zero row)");
    if (integer_rank(d.counts()) != k)
        throw NonIdentifiableError(
            "least_squares_unmix: design has rank below the group count; the "
            "group means are not identifiable");

    // Normal equations (M^T W M) mu = M^T W T with W = diag(1/n_i).
    Matrix normal(k, k);
    std::vector<double> rhs(k, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double w = 1.0 / static_cast<double>(d.row_total(i));
        for (std::size_t a = 0; a < k; ++a) {
            const double da = static_cast<double>(d.count(i, a));
            rhs[a] += w * da * totals[i];
            for (std::size_t b = a; b < k; ++b)
                normal(a, b) += w * da * static_cast<double>(d.count(i, b));
        }
    }
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < a; ++b)
            normal(a, b) = normal(b, a);

    MixtureEstimate out;
    out.estimates = solve(normal, std::move(rhs));
    return out;
}

inline MixtureEstimate least_squares_unmix(const AggregateReport& report) {
    return least_squares_unmix(report.design, report.totals);
}

} // namespace aggstat

#endif // AGGSTAT_ESTIMATORS_HPP
