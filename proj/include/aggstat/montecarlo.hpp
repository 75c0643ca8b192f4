#ifndef AGGSTAT_MONTECARLO_HPP
#define AGGSTAT_MONTECARLO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "aggstat/design.hpp"
#include "aggstat/errors.hpp"
#include "aggstat/estimators.hpp"
#include "aggstat/fisher.hpp"
#include "aggstat/model.hpp"
#include "aggstat/random.hpp"

namespace aggstat {

// A: weigh n items of one group individually (estimates mean and variance).
// B: two baskets of n items of one group (paired variance estimate).
// C: multi-group channel design (unmix the group means).
enum class ExperimentKind { PerItemWeighings, PairedBaskets, MixtureDesign };

inline char experiment_kind_code(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::PerItemWeighings: return 'A';
    case ExperimentKind::PairedBaskets: return 'B';
    case ExperimentKind::MixtureDesign: return 'C';
    }
    return '?';
}

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::PerItemWeighings;
    PopulationSpec population;
    std::optional<ChannelDesign> design; // kinds B (2x1) and C
    std::int64_t item_count = 0;         // kind A
    std::uint64_t replicates = 0;
    std::uint64_t master_seed = 0;
};

// Summary statistics for one estimand over all replicates. Standard errors
// come from the sample variance across replicates (for the MSE, the sample
// variance of the squared errors; no normality shortcut).
struct EstimandSummary {
    std::string name;
    double truth = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double bias_se = 0.0;
    double mse = 0.0;
    double mse_se = 0.0;
    std::optional<double> theory_mse; // closed-form MSE when the model provides one
    std::optional<double> crb;        // Cramer-Rao diagonal entry when defined
};

struct MCSummary {
    std::uint64_t replicates = 0;
    std::vector<EstimandSummary> estimands;

    const EstimandSummary& estimand(const std::string& name) const {
        for (const auto& e : estimands)
            if (e.name == name)
                return e;
        throw std::invalid_argument("MCSummary: no estimand named '" + name + "'");
    }
};

namespace detail {

// Compensated (Neumaier) summation; deterministic for a fixed input order.
class NeumaierSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            c_ += (sum_ - t) + x;
        else
            c_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + c_; }

private:
    double sum_ = 0.0;
    double c_ = 0.0;
};

// Static-chunk parallel loop. Iteration i always lands in chunk
// floor(i*threads/count), so the work partition (and therefore any
// per-iteration output slot) is independent of scheduling.
inline void parallel_for(std::uint64_t count, unsigned threads,
                         const std::function<void(std::uint64_t)>& body) {
    if (threads <= 1 || count < 2) {
        for (std::uint64_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(threads, count));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned t = 0; t < workers; ++t) {
        const std::uint64_t lo = count * t / workers;
        const std::uint64_t hi = count * (t + 1) / workers;
        pool.emplace_back([&, lo, hi, t] {
            try {
                for (std::uint64_t i = lo; i < hi; ++i)
                    body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

inline void validate_experiment(const ExperimentSpec& spec) {
    if (spec.replicates < 1)
        throw std::invalid_argument("ExperimentSpec: at least one replicate required");
    spec.population.validate();
    switch (spec.kind) {
    case ExperimentKind::PerItemWeighings:
        if (spec.population.group_count() != 1)
            throw std::invalid_argument("kind A: population must have exactly one group");
        if (spec.item_count < 1)
            throw std::invalid_argument("kind A: item count must be positive");
        break;
    case ExperimentKind::PairedBaskets: {
        if (spec.population.group_count() != 1)
            throw std::invalid_argument("kind B: population must have exactly one group");
        if (!spec.design)
            throw std::invalid_argument("kind B: design required");
        const ChannelDesign& d = *spec.design;
        if (d.channels() != 2 || d.groups() != 1)
            throw std::invalid_argument("kind B: design must be two baskets of one group");
        if (d.row_total(0) != d.row_total(1) || d.row_total(0) < 1)
            throw std::invalid_argument("kind B: both baskets must contain the same positive item count");
        break;
    }
    case ExperimentKind::MixtureDesign: {
        if (!spec.design)
            throw std::invalid_argument("kind C: design required");
        const ChannelDesign& d = *spec.design;
        if (d.groups() != spec.population.group_count())
            throw std::invalid_argument("kind C: design group count must match population");
        if (!is_identifiable(d))
            throw NonIdentifiableError(
                "kind C: design rank is below the group count (determinant 0 for a "
                "square design); the group means are not identifiable");
        break;
    }
    }
}

} // namespace detail

// Run one experiment: replicate i consumes RandomSource substream
// (substream_offset + i) of the master seed, so results are identical for
// any thread count and any execution order. Reduction happens in replicate
// order after all replicates finish.
//
// Theory references attached to the summary:
//   kind A: MSE(mean) = v/n (also its CRB); MSE(variance) = (2n-1) v^2/n^2.
//   kind B: MSE = 2 v^2 for every n; CRB = v^2/2.
//   kind C: CRB diagonal of the design (needs a common positive per-item
//           variance); the weighted solve attains it, so it doubles as the
//           theory MSE.
inline MCSummary run_experiment(const ExperimentSpec& spec, unsigned threads = 1,
                                std::uint64_t substream_offset = 0) {
    detail::validate_experiment(spec);

    const std::uint64_t reps = spec.replicates;
    std::vector<std::string> names;
    std::vector<double> truths;
    std::vector<std::optional<double>> theory;
    std::vector<std::optional<double>> crb;
    std::function<void(RandomSource&, double*)> evaluate;

    switch (spec.kind) {
    case ExperimentKind::PerItemWeighings: {
        const GroupSpec group = spec.population.groups.front();
        const std::int64_t n = spec.item_count;
        const double v = group.variance;
        const double dn = static_cast<double>(n);
        names = {"mean:" + group.name, "variance:" + group.name};
        truths = {group.mean_weight, v};
        theory = {v / dn, (2.0 * dn - 1.0) * v * v / (dn * dn)};
        crb = {v / dn, std::nullopt};
        evaluate = [group, n](RandomSource& rng, double* out) {
            std::vector<double> weights(static_cast<std::size_t>(n));
            double total = 0.0;
            for (auto& w : weights) {
                w = sample_weight(group, rng);
                total += w;
            }
            out[0] = mean_from_total(total, n);
            out[1] = population_variance(weights);
        };
        break;
    }
    case ExperimentKind::PairedBaskets: {
        const GroupSpec group = spec.population.groups.front();
        const ChannelDesign d = *spec.design;
        const std::int64_t n = d.row_total(0);
        const double v = group.variance;
        names = {"variance:" + group.name};
        truths = {v};
        theory = {2.0 * v * v};
        crb = {v > 0.0 ? std::optional<double>(crb_variance(v)) : std::nullopt};
        const PopulationSpec pop = spec.population;
        evaluate = [d, pop, n](RandomSource& rng, double* out) {
            const double t1 = sample_basket_total(d.row(0), pop, rng);
            const double t2 = sample_basket_total(d.row(1), pop, rng);
            out[0] = paired_variance_estimate(t1, t2, n);
        };
        break;
    }
    case ExperimentKind::MixtureDesign: {
        const ChannelDesign d = *spec.design;
        const std::size_t k = d.groups();
        names.reserve(k);
        std::vector<std::string> group_names;
        for (const auto& g : spec.population.groups) {
            names.push_back("mean:" + g.name);
            truths.push_back(g.mean_weight);
            group_names.push_back(g.name);
        }
        const auto [has_common_v, v] = spec.population.common_variance();
        if (has_common_v && v > 0.0) {
            const CRBMatrix bound = crb_from_fisher(fisher_info_means(d, v, group_names));
            for (double c : bound.diagonal()) {
                crb.emplace_back(c);
                theory.emplace_back(c); // the weighted solve attains the bound
            }
        } else {
            crb.assign(k, std::nullopt);
            theory.assign(k, std::nullopt);
        }
        const PopulationSpec pop = spec.population;
        const bool square_two = d.channels() == 2 && k == 2;
        evaluate = [d, pop, k, square_two](RandomSource& rng, double* out) {
            std::vector<double> totals(d.channels());
            for (std::size_t i = 0; i < d.channels(); ++i)
                totals[i] = sample_basket_total(d.row(i), pop, rng);
            const MixtureEstimate est = square_two
                ? solve_two_group(d, totals[0], totals[1])
                : least_squares_unmix(d, totals);
            for (std::size_t j = 0; j < k; ++j)
                out[j] = est.estimates[j];
        };
        break;
    }
    }

    const std::size_t n_est = names.size();
    std::vector<double> values(reps * n_est);
    detail::parallel_for(reps, threads, [&](std::uint64_t i) {
        RandomSource rng(spec.master_seed, substream_offset + i);
        evaluate(rng, values.data() + i * n_est);
    });

    MCSummary summary;
    summary.replicates = reps;
    summary.estimands.resize(n_est);
    for (std::size_t e = 0; e < n_est; ++e) {
        EstimandSummary& s = summary.estimands[e];
        s.name = names[e];
        s.truth = truths[e];
        s.theory_mse = theory[e];
        s.crb = crb[e];

        detail::NeumaierSum mean_sum;
        detail::NeumaierSum sqerr_sum;
        for (std::uint64_t i = 0; i < reps; ++i) {
            const double x = values[i * n_est + e];
            const double err = x - s.truth;
            mean_sum.add(x);
            sqerr_sum.add(err * err);
        }
        const double r = static_cast<double>(reps);
        s.mean_estimate = mean_sum.value() / r;
        s.bias = s.mean_estimate - s.truth;
        s.mse = sqerr_sum.value() / r;

        if (reps >= 2) {
            detail::NeumaierSum var_est_sum;
            detail::NeumaierSum var_sqerr_sum;
            for (std::uint64_t i = 0; i < reps; ++i) {
                const double x = values[i * n_est + e];
                const double err = x - s.truth;
                const double dm = x - s.mean_estimate;
                const double dq = err * err - s.mse;
                var_est_sum.add(dm * dm);
                var_sqerr_sum.add(dq * dq);
            }
            s.bias_se = std::sqrt(var_est_sum.value() / (r - 1.0) / r);
            s.mse_se = std::sqrt(var_sqerr_sum.value() / (r - 1.0) / r);
        }
    }
    return summary;
}

struct SweepRow {
    std::int64_t n = 0;
    MCSummary summary;
};

struct SweepTable {
    std::vector<SweepRow> rows;
};

// Re-run the experiment across basket sizes. Row j draws from the
// substream block [j*replicates, (j+1)*replicates), so rows are
// independent and the whole table is reproducible from the master seed.
// Kind C needs design_for_n to rebuild the design at each size.
inline SweepTable mse_sweep(const ExperimentSpec& base, std::span<const std::int64_t> n_values,
                            const std::function<ChannelDesign(std::int64_t)>& design_for_n = {},
                            unsigned threads = 1) {
    if (n_values.empty())
        throw std::invalid_argument("mse_sweep: need at least one n value");
    SweepTable table;
    for (std::size_t j = 0; j < n_values.size(); ++j) {
        const std::int64_t n = n_values[j];
        if (n < 1)
            throw std::invalid_argument("mse_sweep: n values must be positive");
        ExperimentSpec spec = base;
        switch (base.kind) {
        case ExperimentKind::PerItemWeighings:
            spec.item_count = n;
            break;
        case ExperimentKind::PairedBaskets:
            spec.design = ChannelDesign({{n}, {n}});
            break;
        case ExperimentKind::MixtureDesign:
            if (!design_for_n)
                throw std::invalid_argument(
                    "mse_sweep: kind C requires a design constructor to sweep n");
            spec.design = design_for_n(n);
            break;
        }
        const std::uint64_t offset = static_cast<std::uint64_t>(j) * base.replicates;
        table.rows.push_back(SweepRow{n, run_experiment(spec, threads, offset)});
    }
    return table;
}

struct CrbComparisonRow {
    std::string estimand;
    double mse = 0.0;
    double mse_se = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
    bool pass = false;
};

struct CrbComparisonReport {
    std::vector<CrbComparisonRow> rows;
    bool all_pass = true;
};

// Compare empirical MSEs against Cramer-Rao floors. A row fails when the
// MSE undercuts the bound by more than three Monte Carlo standard errors,
// which an unbiased estimator should essentially never do.
inline CrbComparisonReport crb_comparison(const MCSummary& summary,
                                          std::span<const double> bound_diagonal,
                                          std::span<const std::string> bound_labels = {}) {
    if (summary.estimands.size() != bound_diagonal.size())
        throw std::invalid_argument("crb_comparison: one bound per estimand required");
    CrbComparisonReport report;
    for (std::size_t i = 0; i < bound_diagonal.size(); ++i) {
        const EstimandSummary& s = summary.estimands[i];
        CrbComparisonRow row;
        row.estimand = bound_labels.empty() ? s.name : bound_labels[i];
        row.mse = s.mse;
        row.mse_se = s.mse_se;
        row.bound = bound_diagonal[i];
        row.ratio = s.mse / row.bound;
        const double rel_se = s.mse > 0.0 ? s.mse_se / s.mse : 0.0;
        row.pass = s.mse >= row.bound * (1.0 - 3.0 * rel_se);
        report.all_pass = report.all_pass && row.pass;
        report.rows.push_back(std::move(row));
    }
    return report;
}

inline CrbComparisonReport crb_comparison(const MCSummary& summary, const CRBMatrix& bound) {
    return crb_comparison(summary, bound.diagonal(), bound.labels);
}

inline CrbComparisonReport crb_comparison(const MCSummary& summary, double scalar_bound) {
    const std::vector<double> diag = {scalar_bound};
    return crb_comparison(summary, diag);
}

} // namespace aggstat

#endif // AGGSTAT_MONTECARLO_HPP
