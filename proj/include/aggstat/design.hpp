#ifndef AGGSTAT_DESIGN_HPP
#define AGGSTAT_DESIGN_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aggstat/linalg.hpp"
#include "aggstat/random.hpp"

namespace aggstat {

// Assignment of item counts per group to each basket/channel. Rows are
// channels, columns are groups; row i's total is the number of items in
// basket i.
class ChannelDesign {
public:
    explicit ChannelDesign(std::vector<std::vector<std::int64_t>> counts)
        : counts_(std::move(counts)) {
        if (counts_.empty())
            throw std::invalid_argument("ChannelDesign: at least one channel required");
        const std::size_t groups = counts_.front().size();
        if (groups == 0)
            throw std::invalid_argument("ChannelDesign: at least one group required");
        for (const auto& row : counts_) {
            if (row.size() != groups)
                throw std::invalid_argument("ChannelDesign: ragged count matrix");
            for (std::int64_t c : row)
                if (c < 0)
                    throw std::invalid_argument("ChannelDesign: counts must be nonnegative");
        }
    }

    std::size_t channels() const { return counts_.size(); }
    std::size_t groups() const { return counts_.front().size(); }

    std::int64_t count(std::size_t channel, std::size_t group) const {
        return counts_[channel][group];
    }

    std::span<const std::int64_t> row(std::size_t channel) const {
        return counts_[channel];
    }

    std::int64_t row_total(std::size_t channel) const {
        std::int64_t total = 0;
        for (std::int64_t c : counts_[channel])
            total += c;
        return total;
    }

    std::vector<std::int64_t> row_totals() const {
        std::vector<std::int64_t> totals(channels());
        for (std::size_t i = 0; i < channels(); ++i)
            totals[i] = row_total(i);
        return totals;
    }

    const std::vector<std::vector<std::int64_t>>& counts() const { return counts_; }

    Matrix as_matrix() const {
        Matrix m(channels(), groups());
        for (std::size_t i = 0; i < channels(); ++i)
            for (std::size_t j = 0; j < groups(); ++j)
                m(i, j) = static_cast<double>(counts_[i][j]);
        return m;
    }

private:
    std::vector<std::vector<std::int64_t>> counts_;
};

namespace detail {
// Rounding rule shared by the typical-value constructors: round the first
// count to the nearest integer, then force the row total to n.
inline std::int64_t round_count(double x) { return std::llround(x); }
} // namespace detail

// Deterministic stand-in for fair coin filling of two baskets with two
// groups: counts n/2 +- sqrt(n), the likely outcome being near-even but not
// exactly even. Rows sum to n exactly.
inline ChannelDesign balanced_typical(std::int64_t n) {
    if (n < 4)
        throw std::invalid_argument(
            "balanced_typical: n must be >= 4 (n/2 - sqrt(n) would be negative)");
    const double root = std::sqrt(static_cast<double>(n));
    const std::int64_t a1 = detail::round_count(static_cast<double>(n) / 2.0 + root);
    const std::int64_t o1 = n - a1;
    return ChannelDesign({{a1, o1}, {o1, a1}});
}

// Typical counts for a biased coin with heads probability p: the first
// basket gets round(n*p) of group 0, the second the mirror image.
inline ChannelDesign biased_typical(std::int64_t n, double p) {
    if (n < 1)
        throw std::invalid_argument("biased_typical: n must be positive");
    if (p < 0.0 || p > 1.0)
        throw std::invalid_argument("biased_typical: p must lie in [0, 1]");
    const std::int64_t a1 = detail::round_count(static_cast<double>(n) * p);
    const std::int64_t o1 = n - a1;
    return ChannelDesign({{a1, o1}, {o1, a1}});
}

// Actually flip the coin: basket 1 holds Binomial(n, p) items of group 0,
// basket 2 is filled by an independent run of the complementary rule.
inline ChannelDesign coinflip_counts(std::int64_t n, double p, RandomSource& rng) {
    if (n < 1)
        throw std::invalid_argument("coinflip_counts: n must be positive");
    const std::int64_t a1 = rng.binomial(n, p);
    const std::int64_t a2 = rng.binomial(n, 1.0 - p);
    return ChannelDesign({{a1, n - a1}, {a2, n - a2}});
}

// Row-wise concatenation; models repeated measurements with reassigned
// channels. Information from independent measurements adds, so stacking k
// copies of a design multiplies its Fisher matrix by k.
inline ChannelDesign stack(std::span<const ChannelDesign> designs) {
    if (designs.empty())
        throw std::invalid_argument("stack: need at least one design");
    const std::size_t groups = designs.front().groups();
    std::vector<std::vector<std::int64_t>> rows;
    for (const auto& d : designs) {
        if (d.groups() != groups)
            throw std::invalid_argument("stack: designs must share the same group count");
        for (const auto& row : d.counts())
            rows.push_back(row);
    }
    return ChannelDesign(std::move(rows));
}

inline ChannelDesign stack(std::initializer_list<ChannelDesign> designs) {
    std::vector<ChannelDesign> v(designs);
    return stack(std::span<const ChannelDesign>(v));
}

struct DesignDiagnostics {
    std::size_t rank = 0;
    std::optional<std::int64_t> determinant; // square designs only, exact
    double condition_estimate = 0.0;         // sigma_max / sigma_min; inf when rank-deficient
};

// Rank and determinant are computed in exact integer arithmetic; the
// condition estimate is the singular-value ratio of the count matrix.
inline DesignDiagnostics design_diagnostics(const ChannelDesign& d) {
    DesignDiagnostics out;
    out.rank = integer_rank(d.counts());
    if (d.channels() == d.groups())
        out.determinant = integer_determinant(d.counts());
    const std::vector<double> sv = singular_values(d.as_matrix());
    const double smax = sv.front();
    const double smin = sv.back();
    const bool full_rank = out.rank == std::min(d.channels(), d.groups());
    if (!full_rank || smin == 0.0)
        out.condition_estimate = std::numeric_limits<double>::infinity();
    else
        out.condition_estimate = smax / smin;
    return out;
}

// True when the design determines all group means: full column rank,
// decided exactly on the integer counts.
inline bool is_identifiable(const ChannelDesign& d) {
    return d.channels() >= d.groups() && integer_rank(d.counts()) == d.groups();
}

} // namespace aggstat

#endif // AGGSTAT_DESIGN_HPP
