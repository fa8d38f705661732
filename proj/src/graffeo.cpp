#include "netsurv/graffeo.hpp"

#include <Eigen/Eigenvalues>

#include "netsurv/distributions.hpp"
#include "netsurv/error.hpp"

namespace netsurv {

ReducedForm reduced_quadratic_form(const Eigen::VectorXd& z, const Eigen::MatrixXd& sigma, Eigen::Index drop,
                                   double condition_limit) {
    const Eigen::Index k = z.size();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index g = 0; g < k; ++g) {
        if (g != drop) keep.push_back(g);
    }
    const auto r = static_cast<Eigen::Index>(keep.size());
    Eigen::VectorXd zr(r);
    Eigen::MatrixXd sr(r, r);
    for (Eigen::Index a = 0; a < r; ++a) {
        zr[a] = z[keep[static_cast<std::size_t>(a)]];
        for (Eigen::Index b = 0; b < r; ++b) sr(a, b) = sigma(keep[static_cast<std::size_t>(a)], keep[static_cast<std::size_t>(b)]);
    }

    ReducedForm out;
    if (r == 0) return out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sr);
    const Eigen::VectorXd& lambda = eig.eigenvalues(); // ascending
    const double largest = lambda[r - 1];
    if (!(largest > 0)) {
        out.pseudo_inverse = true;
        return out;
    }
    if (lambda[0] > 0 && largest / lambda[0] <= condition_limit) {
        out.statistic = zr.dot(sr.ldlt().solve(zr));
        out.dof = static_cast<int>(r);
        return out;
    }
    out.pseudo_inverse = true;
    const Eigen::VectorXd proj = eig.eigenvectors().transpose() * zr;
    for (Eigen::Index i = 0; i < r; ++i) {
        if (lambda[i] > largest / condition_limit) {
            out.statistic += proj[i] * proj[i] / lambda[i];
            ++out.dof;
        }
    }
    return out;
}

GraffeoResult graffeo_test(const Cohort& cohort, std::span<const Life> lives, const FormulaSpec& formula,
                           const DailyGrid& grid, const GraffeoOptions& options) {
    validate_formula(formula, cohort);
    if (lives.size() != cohort.size()) {
        throw Error(ErrorCode::InvalidArgument, "one population life per patient is required");
    }
    if (formula.group_cols.empty()) {
        throw Error(ErrorCode::Arity, "the net survival log-rank test needs a grouping variable (got '~ 1')");
    }
    const Grouping groups = make_grouping(cohort, formula.group_cols);
    const Grouping strata = make_grouping(cohort, formula.strata_cols);
    const auto k = static_cast<Eigen::Index>(groups.labels.size());
    if (k < 2) {
        throw Error(ErrorCode::Arity, "the net survival log-rank test needs at least two groups, found " +
                                          std::to_string(k));
    }

    Eigen::VectorXd z = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd total_weight = Eigen::VectorXd::Zero(k);

    SumsRequest request;
    request.weighted = true;
    for (std::size_t st = 0; st < strata.labels.size(); ++st) {
        // Per-group Pohar Perme numerator, denominator and squared-weight deaths.
        Eigen::MatrixXd numer = Eigen::MatrixXd::Zero(grid.t_max, k);
        Eigen::MatrixXd denom = Eigen::MatrixXd::Zero(grid.t_max, k);
        Eigen::MatrixXd deaths2 = Eigen::MatrixXd::Zero(grid.t_max, k);
        for (Eigen::Index g = 0; g < k; ++g) {
            std::vector<std::size_t> members;
            for (auto i : strata.members[st]) {
                if (groups.group_of[i] == g) members.push_back(i);
            }
            if (members.empty()) continue;
            const auto sums = accumulate_population(cohort, lives, members, grid, request, options.threads);
            numer.col(g) = sums.weighted_events - sums.weighted_expected;
            denom.col(g) = sums.weighted_at_risk;
            deaths2.col(g) = sums.weighted2_events;
        }
        total_weight += denom.colwise().sum().transpose();

        for (Eigen::Index s = 0; s < grid.t_max; ++s) {
            const double pooled_weight = denom.row(s).sum();
            if (!(pooled_weight > 0)) continue;
            const double pooled_hazard = numer.row(s).sum() / pooled_weight;
            const Eigen::VectorXd share = denom.row(s).transpose() / pooled_weight;
            const Eigen::VectorXd v = deaths2.row(s).transpose();
            const double v_total = v.sum();
            for (Eigen::Index g = 0; g < k; ++g) {
                z[g] += numer(s, g) - denom(s, g) * pooled_hazard;
                for (Eigen::Index h = 0; h < k; ++h) {
                    // sum_l (delta_gl - R_g)(delta_hl - R_h) v_l
                    double term = -share[h] * v[g] - share[g] * v[h] + share[g] * share[h] * v_total;
                    if (g == h) term += v[g];
                    sigma(g, h) += term;
                }
            }
        }
    }

    GraffeoResult result;
    result.strata = strata.labels;
    std::vector<Eigen::Index> included;
    for (Eigen::Index g = 0; g < k; ++g) {
        if (total_weight[g] > 0) {
            included.push_back(g);
        } else {
            result.warnings.push_back("group '" + groups.labels[static_cast<std::size_t>(g)] +
                                      "' has no patient at risk on the grid and was excluded");
        }
    }
    const auto kept = static_cast<Eigen::Index>(included.size());
    if (kept < 2) {
        throw Error(ErrorCode::Arity, "the net survival log-rank test needs at least two groups with patients at risk");
    }
    result.per_group_Z.resize(kept);
    result.covariance.resize(kept, kept);
    for (Eigen::Index a = 0; a < kept; ++a) {
        const auto ga = included[static_cast<std::size_t>(a)];
        result.groups.push_back(groups.labels[static_cast<std::size_t>(ga)]);
        result.per_group_Z[a] = z[ga];
        for (Eigen::Index b = 0; b < kept; ++b) result.covariance(a, b) = sigma(ga, included[static_cast<std::size_t>(b)]);
    }

    const auto form = reduced_quadratic_form(result.per_group_Z, result.covariance, kept - 1, options.condition_limit);
    result.statistic = form.statistic;
    result.dof = form.dof;
    result.pseudo_inverse = form.pseudo_inverse;
    result.p_value = form.dof > 0 ? chisq_sf(form.statistic, form.dof) : 1.0;
    if (form.pseudo_inverse) {
        result.warnings.push_back("reduced covariance is rank deficient; used a pseudo-inverse with " +
                                  std::to_string(form.dof) + " degrees of freedom");
    }
    return result;
}

GraffeoResult graffeo_test(const Cohort& cohort, const RateTable& table, const AxisBinding& binding,
                           const FormulaSpec& formula, const DailyGrid& grid, const GraffeoOptions& options) {
    const auto bound = bind_axes(cohort, table, binding);
    return graffeo_test(cohort, bound.lives, formula, grid, options);
}

} // namespace netsurv
