#ifndef AGGSTAT_MODEL_HPP
#define AGGSTAT_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "aggstat/random.hpp"

namespace aggstat {

// One exchangeable item population: weights are Normal(mean_weight, variance).
// Units are pounds (a label only; no conversion logic anywhere).
struct GroupSpec {
    std::string name;
    double mean_weight = 0.0;
    double variance = 0.0; // pounds^2, >= 0

    GroupSpec() = default;
    GroupSpec(std::string name_, double mean_weight_, double variance_)
        : name(std::move(name_)), mean_weight(mean_weight_), variance(variance_) {
        validate();
    }

    void validate() const {
        if (name.empty())
            throw std::invalid_argument("GroupSpec: name must be nonempty");
        if (!std::isfinite(mean_weight))
            throw std::invalid_argument("GroupSpec: mean weight must be finite");
        if (!(variance >= 0.0) || !std::isfinite(variance))
            throw std::invalid_argument("GroupSpec: variance must be finite and >= 0");
    }
};

// Ordered list of groups with unique names.
struct PopulationSpec {
    std::vector<GroupSpec> groups;

    PopulationSpec() = default;
    explicit PopulationSpec(std::vector<GroupSpec> groups_) : groups(std::move(groups_)) {
        validate();
    }

    std::size_t group_count() const { return groups.size(); }

    void validate() const {
        if (groups.empty())
            throw std::invalid_argument("PopulationSpec: at least one group required");
        std::unordered_set<std::string> seen;
        for (const auto& g : groups) {
            g.validate();
            if (!seen.insert(g.name).second)
                throw std::invalid_argument("PopulationSpec: duplicate group name '" + g.name + "'");
        }
    }

    // All groups share one per-item variance (the common-v model); empty otherwise.
    std::pair<bool, double> common_variance() const {
        const double v = groups.front().variance;
        for (const auto& g : groups)
            if (g.variance != v)
                return {false, 0.0};
        return {true, v};
    }
};

// One item weight drawn from the group's normal law. Zero variance is legal
// and returns the mean exactly.
inline double sample_weight(const GroupSpec& group, RandomSource& rng) {
    return rng.normal(group.mean_weight, std::sqrt(group.variance));
}

// Total weight of a basket holding counts[j] items of group j.
//
// A sum of independent normals is itself normal, so the total is drawn in
// one step from Normal(sum_j counts[j]*mean_j, sum_j counts[j]*var_j). This
// is distribution-exact, costs one draw per basket regardless of the item
// count, and consumes exactly one normal from the stream even when the
// aggregate variance is zero.
inline double sample_basket_total(std::span<const std::int64_t> counts,
                                  const PopulationSpec& pop, RandomSource& rng) {
    if (counts.size() != pop.group_count())
        throw std::invalid_argument("sample_basket_total: counts length must equal group count");
    double mean = 0.0;
    double var = 0.0;
    for (std::size_t j = 0; j < counts.size(); ++j) {
        if (counts[j] < 0)
            throw std::invalid_argument("sample_basket_total: counts must be nonnegative");
        mean += static_cast<double>(counts[j]) * pop.groups[j].mean_weight;
        var += static_cast<double>(counts[j]) * pop.groups[j].variance;
    }
    return rng.normal(mean, std::sqrt(var));
}

} // namespace aggstat

#endif // AGGSTAT_MODEL_HPP
