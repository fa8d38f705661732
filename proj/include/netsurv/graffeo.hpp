#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "netsurv/binding.hpp"
#include "netsurv/estimators.hpp"

namespace netsurv {

/// Log-rank-type comparison of net survival between groups, built on the
/// Pohar Perme numerator and denominator of each group.
struct GraffeoResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    std::vector<std::string> groups; // groups entering the test, label order
    std::vector<std::string> strata;
    Eigen::VectorXd per_group_Z;
    Eigen::MatrixXd covariance; // full k x k estimate, singular by construction
    bool pseudo_inverse = false;
    std::vector<std::string> warnings;
};

struct GraffeoOptions {
    unsigned threads = 1;
    /// Largest eigenvalue ratio accepted before switching to a thresholded
    /// pseudo-inverse of the reduced covariance.
    double condition_limit = 1e12;
};

/// Quadratic form z' S^-1 z after removing index `drop` from z and sigma.
struct ReducedForm {
    double statistic = 0.0;
    int dof = 0;
    bool pseudo_inverse = false;
};

ReducedForm reduced_quadratic_form(const Eigen::VectorXd& z, const Eigen::MatrixXd& sigma, Eigen::Index drop,
                                   double condition_limit = 1e12);

/// Groups come from the formula's grouping columns, strata from its Strata()
/// terms; Z and the covariance are summed over strata before inversion.
/// Throws Arity with fewer than two groups carrying at-risk weight.
GraffeoResult graffeo_test(const Cohort& cohort, std::span<const Life> lives, const FormulaSpec& formula,
                           const DailyGrid& grid, const GraffeoOptions& options = {});

GraffeoResult graffeo_test(const Cohort& cohort, const RateTable& table, const AxisBinding& binding,
                           const FormulaSpec& formula, const DailyGrid& grid, const GraffeoOptions& options = {});

} // namespace netsurv
