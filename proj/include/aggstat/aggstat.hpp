#ifndef AGGSTAT_AGGSTAT_HPP
#define AGGSTAT_AGGSTAT_HPP

// Umbrella header for the aggregated-measurement estimation library.

#include "aggstat/config.hpp"
#include "aggstat/design.hpp"
#include "aggstat/errors.hpp"
#include "aggstat/estimators.hpp"
#include "aggstat/fisher.hpp"
#include "aggstat/linalg.hpp"
#include "aggstat/model.hpp"
#include "aggstat/montecarlo.hpp"
#include "aggstat/random.hpp"
#include "aggstat/report.hpp"

#endif // AGGSTAT_AGGSTAT_HPP
