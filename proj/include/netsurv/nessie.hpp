#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "netsurv/binding.hpp"

namespace netsurv {

/// Expected net sample size and expected remaining lifetime per group.
struct NessieResult {
    std::vector<std::string> groups;
    Eigen::VectorXd time_points; // years
    Eigen::VectorXd elt;         // years, one per group
    Eigen::MatrixXd ess;         // rows = time points, cols = groups
};

/// Yearly points 0, 1, ..., floor(max follow-up / 365.241).
Eigen::VectorXd default_time_points(const Cohort& cohort);

/// ess(t, g) = sum_{i in g} S_{P_i}(t * 365.241), rows = time points.
///
/// Survival values are accumulated in 64-bit fixed point with a scale that
/// depends only on the cohort size, so sums over disjoint groups add up
/// bit-for-bit and thread count never matters.
Eigen::MatrixXd expected_sample_size(std::span<const Life> lives, const Grouping& groups,
                                     const Eigen::VectorXd& time_points, unsigned threads = 1);

/// elt(g) = mean_{i in g} E(P_i) / 365.241. Throws DivergentExpectation when a
/// life's terminal rate is zero.
Eigen::VectorXd expected_lifetime(std::span<const Life> lives, const Grouping& groups, unsigned threads = 1);

/// Both of the above for the formula's grouping and strata columns.
NessieResult nessie(const Cohort& cohort, std::span<const Life> lives, const FormulaSpec& formula,
                    const Eigen::VectorXd& time_points, unsigned threads = 1);

NessieResult nessie(const Cohort& cohort, const RateTable& table, const AxisBinding& binding,
                    const FormulaSpec& formula, const Eigen::VectorXd& time_points, unsigned threads = 1);

} // namespace netsurv
