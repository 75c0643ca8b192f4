#ifndef AGGSTAT_FISHER_HPP
#define AGGSTAT_FISHER_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aggstat/design.hpp"
#include "aggstat/errors.hpp"
#include "aggstat/linalg.hpp"

namespace aggstat {

// Information matrices with a condition number above this are treated as
// non-identifiable; beyond it a double-precision inverse is meaningless.
inline constexpr double kMaxInformationCondition = 1e12;

// Fisher information matrix J(theta) with one label per parameter.
// Symmetric positive semidefinite by construction.
struct FisherMatrix {
    Matrix entries;
    std::vector<std::string> labels;

    std::size_t size() const { return entries.rows(); }
};

// Inverse information matrix J^-1(theta). Diagonal entries are the
// Cramer-Rao floors on the variance of unbiased estimators.
struct CRBMatrix {
    Matrix entries;
    std::vector<std::string> labels;

    std::size_t size() const { return entries.rows(); }

    std::vector<double> diagonal() const {
        std::vector<double> d(entries.rows());
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = entries(i, i);
        return d;
    }
};

// Central moments of Normal(mu, variance): order 2 is the variance itself,
// order 4 is 3*variance^2.
inline double normal_central_moment(double variance, int order) {
    if (!(variance >= 0.0))
        throw std::invalid_argument("normal_central_moment: variance must be >= 0");
    switch (order) {
    case 2:
        return variance;
    case 4:
        return 3.0 * variance * variance;
    default:
        throw std::invalid_argument("normal_central_moment: only orders 2 and 4 are supported");
    }
}

// Fisher information for the per-item variance from two basket totals,
// J(v) = 2/v^2. Independent of the basket sizes: adding items to a basket
// does not add information about the variance.
inline double fisher_info_variance(double v) {
    if (!(v > 0.0))
        throw std::invalid_argument("fisher_info_variance: variance must be positive");
    return 2.0 / (v * v);
}

// Cramer-Rao floor on the squared error of any unbiased variance
// estimator built from two totals: v^2/2 = 1/J(v).
inline double crb_variance(double v) {
    if (!(v > 0.0))
        throw std::invalid_argument("crb_variance: variance must be positive");
    return v * v / 2.0;
}

// Fisher information for the group means under a channel design with
// common per-item variance v: J = M^T diag(1/(n_i v)) M, where n_i is the
// item count of channel i. For a 2x2 design with both rows totalling n
// this is (1/(n v)) [[a1^2+a2^2, a1 o1+a2 o2], [a1 o1+a2 o2, o1^2+o2^2]].
inline FisherMatrix fisher_info_means(const ChannelDesign& d, double v,
                                      std::vector<std::string> labels = {}) {
    if (!(v > 0.0))
        throw std::invalid_argument("fisher_info_means: variance must be positive");
    const std::size_t m = d.channels();
    const std::size_t k = d.groups();
    for (std::size_t i = 0; i < m; ++i)
        if (d.row_total(i) == 0)
            throw std::invalid_argument("fisher_info_means: channel " + std::to_string(i) +
                                        " is empty (zero row)");
    if (labels.empty()) {
        labels.reserve(k);
        for (std::size_t j = 0; j < k; ++j)
            labels.push_back("group" + std::to_string(j));
    } else if (labels.size() != k) {
        throw std::invalid_argument("fisher_info_means: one label per group required");
    }

    Matrix j(k, k);
    for (std::size_t i = 0; i < m; ++i) {
        const double w = 1.0 / (static_cast<double>(d.row_total(i)) * v);
        for (std::size_t a = 0; a < k; ++a) {
            const double da = static_cast<double>(d.count(i, a));
            for (std::size_t b = a; b < k; ++b)
                j(a, b) += w * da * static_cast<double>(d.count(i, b));
        }
    }
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < a; ++b)
            j(a, b) = j(b, a);
    return FisherMatrix{std::move(j), std::move(labels)};
}

// Invert an information matrix into Cramer-Rao bounds. Rejects singular or
// near-singular information (eigenvalue ratio beyond
// kMaxInformationCondition) as non-identifiable.
inline CRBMatrix crb_from_fisher(const FisherMatrix& fisher) {
    const std::vector<double> eig = symmetric_eigenvalues(fisher.entries);
    const double lo = eig.back();
    const double hi = eig.front();
    if (!(lo > 0.0) || hi / lo >= kMaxInformationCondition)
        throw NonIdentifiableError(
            "information matrix is singular or near-singular (eigenvalue range [" +
            std::to_string(lo) + ", " + std::to_string(hi) +
            "]); the design does not identify the parameters");
    return CRBMatrix{invert(fisher.entries), fisher.labels};
}

// Closed-form Cramer-Rao matrix for the biased typical design with counts
// (np, nq; nq, np), q = 1-p:
//
//   J^-1 = v / (n (p-q)^2) * [[p^2+q^2, -2pq], [-2pq, p^2+q^2]]
//
// Every entry falls like 1/n, so any useful bias (p != 1/2) makes the two
// means estimable. At p = 1/2 the design is singular.
inline CRBMatrix crb_biased_typical(std::int64_t n, double p, double v,
                                    std::vector<std::string> labels = {}) {
    if (n < 1)
        throw std::invalid_argument("crb_biased_typical: n must be positive");
    if (p < 0.0 || p > 1.0)
        throw std::invalid_argument("crb_biased_typical: p must lie in [0, 1]");
    if (!(v > 0.0))
        throw std::invalid_argument("crb_biased_typical: variance must be positive");
    if (p == 0.5)
        throw NonIdentifiableError(
            "crb_biased_typical: p = 1/2 gives a singular design (determinant 0)");
    if (labels.empty())
        labels = {"group0", "group1"};
    else if (labels.size() != 2)
        throw std::invalid_argument("crb_biased_typical: exactly two labels required");
    const double q = 1.0 - p;
    const double scale = v / (static_cast<double>(n) * (p - q) * (p - q));
    Matrix m(2, 2);
    m(0, 0) = m(1, 1) = scale * (p * p + q * q);
    m(0, 1) = m(1, 0) = scale * (-2.0 * p * q);
    return CRBMatrix{std::move(m), std::move(labels)};
}

// Per-parameter ratio of empirical MSE to the Cramer-Rao diagonal. An
// unbiased estimator should produce ratios >= 1 up to Monte Carlo noise;
// 1.0 means the bound is achieved.
inline std::vector<double> efficiency_ratio(std::span<const double> empirical_mse,
                                            const CRBMatrix& crb) {
    if (empirical_mse.size() != crb.size())
        throw std::invalid_argument("efficiency_ratio: one MSE per parameter required");
    std::vector<double> out(empirical_mse.size());
    const std::vector<double> diag = crb.diagonal();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = empirical_mse[i] / diag[i];
    return out;
}

} // namespace aggstat

#endif // AGGSTAT_FISHER_HPP
