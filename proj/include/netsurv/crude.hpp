#pragma once

#include <Eigen/Dense>

#include <string>

#include "netsurv/estimators.hpp"

namespace netsurv {

/// Cronin-Feuer decomposition of overall mortality into excess (M_E) and
/// population (M_P) parts, per day of the grid.
struct CrudeMortality {
    DailyGrid grid;
    std::string group_label;
    Eigen::VectorXd one_minus_S_O;
    Eigen::VectorXd excess;
    Eigen::VectorXd population;
};

/// M_E(s) = sum_{u <= s} S_O(u - 1) dLambda_E(u) and M_P = (1 - S_O) - M_E.
/// M_P, and M_E when M_E < 0, are adjusted by at most a few ulps so that
/// M_E + M_P == 1 - S_O holds exactly in floating point. Throws GridMismatch when the fits disagree.
CrudeMortality crude_mortality(const NetSurvivalFit& net, const SurvivalFit& km);

} // namespace netsurv
