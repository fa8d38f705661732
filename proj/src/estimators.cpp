#include "netsurv/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "netsurv/distributions.hpp"
#include "netsurv/error.hpp"
#include "netsurv/summation.hpp"

namespace netsurv {

DailyGrid DailyGrid::covering(const Cohort& cohort) {
    const double max_t = cohort.size() ? cohort.time.maxCoeff() : 0.0;
    return DailyGrid{std::max(1, static_cast<int>(std::ceil(max_t)))};
}

std::string_view method_name(Method method) {
    switch (method) {
    case Method::PoharPerme: return "pohar-perme";
    case Method::EdererI: return "ederer1";
    case Method::EdererII: return "ederer2";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    for (Method m : {Method::PoharPerme, Method::EdererI, Method::EdererII}) {
        if (name == method_name(m)) return m;
    }
    throw Error(ErrorCode::InvalidArgument,
                "unknown method '" + std::string(name) + "'; expected one of {pohar-perme, ederer1, ederer2}");
}

namespace {

std::vector<std::size_t> all_members(const Cohort& cohort) {
    std::vector<std::size_t> m(cohort.size());
    std::iota(m.begin(), m.end(), std::size_t{0});
    return m;
}

Eigen::VectorXd product_limit(const Eigen::VectorXd& increments) {
    Eigen::VectorXd s(increments.size());
    double running = 1.0;
    for (Eigen::Index i = 0; i < increments.size(); ++i) {
        running *= 1.0 - increments[i];
        s[i] = running;
    }
    return s;
}

Eigen::VectorXd cumulative(const Eigen::VectorXd& increments) {
    Eigen::VectorXd c(increments.size());
    double running = 0.0;
    for (Eigen::Index i = 0; i < increments.size(); ++i) {
        running += increments[i];
        c[i] = running;
    }
    return c;
}

} // namespace

CountingIncrements counting_increments(const Cohort& cohort, std::span<const std::size_t> members,
                                       const DailyGrid& grid) {
    CountingIncrements out{Eigen::VectorXd::Zero(grid.t_max), Eigen::VectorXd::Zero(grid.t_max)};
    Eigen::VectorXd exits = Eigen::VectorXd::Zero(grid.t_max + 1);
    for (const auto i : members) {
        const auto k = static_cast<Eigen::Index>(i);
        const double t = cohort.time[k];
        exits[at_risk_days(t, grid)] += 1.0;
        if (cohort.status[k] == 1) {
            if (const int day = event_day(t, grid); day > 0) out.events[day - 1] += 1.0;
        }
    }
    // at_risk(s) = #{patients at risk for at least s days}
    double remaining = static_cast<double>(members.size()) - exits[0];
    for (int s = 1; s <= grid.t_max; ++s) {
        out.at_risk[s - 1] = remaining;
        remaining -= exits[s];
    }
    return out;
}

CountingIncrements counting_increments(const Cohort& cohort, const DailyGrid& grid) {
    const auto m = all_members(cohort);
    return counting_increments(cohort, m, grid);
}

SurvivalFit kaplan_meier(const Cohort& cohort, std::span<const std::size_t> members, const DailyGrid& grid) {
    if (members.empty()) throw Error(ErrorCode::EmptyGroup, "Kaplan-Meier needs at least one patient");
    const auto counts = counting_increments(cohort, members, grid);
    SurvivalFit fit;
    fit.grid = grid;
    fit.dLambda = Eigen::VectorXd::Zero(grid.t_max);
    Eigen::VectorXd dvar = Eigen::VectorXd::Zero(grid.t_max);
    for (Eigen::Index s = 0; s < grid.t_max; ++s) {
        const double y = counts.at_risk[s];
        const double d = counts.events[s];
        if (y > 0) {
            fit.dLambda[s] = d / y;
            // Greenwood is undefined once every remaining patient dies.
            if (y > d) dvar[s] = d / (y * (y - d));
        }
    }
    fit.var_cum = cumulative(dvar);
    fit.S = product_limit(fit.dLambda);
    return fit;
}

SurvivalFit kaplan_meier(const Cohort& cohort, const DailyGrid& grid) {
    const auto m = all_members(cohort);
    return kaplan_meier(cohort, m, grid);
}

PopulationTerms population_terms(std::span<const Life> lives, const DailyGrid& grid, std::size_t max_cells) {
    const std::size_t cells = lives.size() * static_cast<std::size_t>(grid.t_max);
    if (cells > max_cells) {
        throw Error(ErrorCode::InvalidArgument,
                    "population terms would need " + std::to_string(cells) + " cells (budget " +
                        std::to_string(max_cells) + "); stream them with PopulationStream instead");
    }
    const auto n = static_cast<Eigen::Index>(lives.size());
    PopulationTerms out{Eigen::MatrixXd(n, grid.t_max), Eigen::MatrixXd(n, grid.t_max)};
    for (Eigen::Index i = 0; i < n; ++i) {
        PopulationStream stream(lives[static_cast<std::size_t>(i)]);
        for (Eigen::Index s = 0; s < grid.t_max; ++s) {
            const auto day = stream.next();
            out.survival_before(i, s) = std::exp(-day.cumhaz_before);
            out.increment(i, s) = day.increment;
        }
    }
    return out;
}

PopulationSums accumulate_population(const Cohort& cohort, std::span<const Life> lives,
                                     std::span<const std::size_t> members, const DailyGrid& grid,
                                     const SumsRequest& request, unsigned threads) {
    const Eigen::Index days = grid.t_max;
    const auto counts = counting_increments(cohort, members, grid);

    struct Partial {
        CompensatedVector weighted_events, weighted_expected, weighted_at_risk, weighted2_events;
        CompensatedVector expected, cohort_expected, cohort_survival;
    };
    const std::size_t block = patient_block_size(members.size());
    const std::size_t n_blocks = (members.size() + block - 1) / block;
    std::vector<Partial> partials(n_blocks);

    parallel_for_blocks(n_blocks, threads, [&](std::size_t b) {
        Partial& p = partials[b];
        if (request.weighted) {
            p.weighted_events = CompensatedVector(days);
            p.weighted_expected = CompensatedVector(days);
            p.weighted_at_risk = CompensatedVector(days);
            p.weighted2_events = CompensatedVector(days);
        }
        if (request.at_risk_expected) p.expected = CompensatedVector(days);
        if (request.whole_cohort) {
            p.cohort_expected = CompensatedVector(days);
            p.cohort_survival = CompensatedVector(days);
        }
        const std::size_t end = std::min(members.size(), (b + 1) * block);
        for (std::size_t m = b * block; m < end; ++m) {
            const std::size_t i = members[m];
            const auto k = static_cast<Eigen::Index>(i);
            const double t = cohort.time[k];
            const int risk_days = at_risk_days(t, grid);
            const int death_day = cohort.status[k] == 1 ? event_day(t, grid) : 0;
            const int horizon = request.whole_cohort ? grid.t_max : risk_days;

            PopulationStream stream(lives[i]);
            for (int s = 1; s <= horizon; ++s) {
                const auto day = stream.next();
                const Eigen::Index j = s - 1;
                if (s <= risk_days) {
                    if (request.weighted) {
                        const double inv = std::exp(day.cumhaz_before);
                        p.weighted_at_risk.add(j, inv);
                        p.weighted_expected.add(j, inv * day.increment);
                        if (s == death_day) {
                            p.weighted_events.add(j, inv);
                            p.weighted2_events.add(j, inv * inv);
                        }
                    }
                    if (request.at_risk_expected) p.expected.add(j, day.increment);
                }
                if (request.whole_cohort) {
                    const double surv = std::exp(-day.cumhaz_before);
                    p.cohort_survival.add(j, surv);
                    p.cohort_expected.add(j, surv * day.increment);
                }
            }
        }
    });

    auto reduce = [&](CompensatedVector Partial::*field) -> Eigen::VectorXd {
        CompensatedVector total(days);
        for (const auto& p : partials) {
            const auto& part = p.*field;
            if (part.empty()) continue;
            const Eigen::VectorXd v = part.value();
            for (Eigen::Index j = 0; j < days; ++j) total.add(j, v[j]);
        }
        return total.value();
    };

    PopulationSums out;
    out.events = counts.events;
    out.at_risk = counts.at_risk;
    if (request.weighted) {
        out.weighted_events = reduce(&Partial::weighted_events);
        out.weighted_expected = reduce(&Partial::weighted_expected);
        out.weighted_at_risk = reduce(&Partial::weighted_at_risk);
        out.weighted2_events = reduce(&Partial::weighted2_events);
    }
    if (request.at_risk_expected) out.expected = reduce(&Partial::expected);
    if (request.whole_cohort) {
        out.cohort_expected = reduce(&Partial::cohort_expected);
        out.cohort_survival = reduce(&Partial::cohort_survival);
    }
    return out;
}

NetSurvivalFit fit_group(const Cohort& cohort, std::span<const Life> lives, std::span<const std::size_t> members,
                         Method method, const DailyGrid& grid, const FitOptions& options) {
    if (members.empty()) throw Error(ErrorCode::EmptyGroup, "cannot fit an empty group");
    if (lives.size() != cohort.size()) {
        throw Error(ErrorCode::InvalidArgument, "one population life per patient is required");
    }

    SumsRequest request;
    request.weighted = method == Method::PoharPerme;
    request.at_risk_expected = method == Method::EdererII;
    request.whole_cohort = method == Method::EdererI;
    const auto sums = accumulate_population(cohort, lives, members, grid, request, options.threads);
    if (!(sums.at_risk.array() > 0).any()) {
        throw Error(ErrorCode::NoAtRisk, "no patient is at risk on any day of the grid");
    }

    NetSurvivalFit fit;
    fit.grid = grid;
    fit.method = method;
    fit.dLambda = Eigen::VectorXd::Zero(grid.t_max);
    Eigen::VectorXd dvar = Eigen::VectorXd::Zero(grid.t_max);
    for (Eigen::Index s = 0; s < grid.t_max; ++s) {
        switch (method) {
        case Method::PoharPerme: {
            const double w = sums.weighted_at_risk[s];
            if (w > 0) {
                fit.dLambda[s] = (sums.weighted_events[s] - sums.weighted_expected[s]) / w;
                dvar[s] = sums.weighted2_events[s] / (w * w);
            }
            break;
        }
        case Method::EdererI: {
            const double y = sums.at_risk[s];
            if (y > 0) {
                fit.dLambda[s] = sums.events[s] / y - sums.cohort_expected[s] / sums.cohort_survival[s];
                dvar[s] = sums.events[s] / (y * y);
            }
            break;
        }
        case Method::EdererII: {
            const double y = sums.at_risk[s];
            if (y > 0) {
                fit.dLambda[s] = sums.events[s] / y - sums.expected[s] / y;
                dvar[s] = sums.events[s] / (y * y);
            }
            break;
        }
        }
    }
    fit.var_cum = cumulative(dvar);
    fit.S = product_limit(fit.dLambda);
    return fit;
}

namespace {

Grouping fit_grouping(const Cohort& cohort, const FormulaSpec& formula) {
    validate_formula(formula, cohort);
    std::vector<std::string> columns = formula.group_cols;
    columns.insert(columns.end(), formula.strata_cols.begin(), formula.strata_cols.end());
    return make_grouping(cohort, columns);
}

} // namespace

std::vector<NetSurvivalFit> fit_net_survival(const Cohort& cohort, std::span<const Life> lives, Method method,
                                             const FormulaSpec& formula, const DailyGrid& grid,
                                             const FitOptions& options) {
    const Grouping groups = fit_grouping(cohort, formula);
    std::vector<NetSurvivalFit> fits;
    fits.reserve(groups.labels.size());
    for (std::size_t g = 0; g < groups.labels.size(); ++g) {
        auto fit = fit_group(cohort, lives, groups.members[g], method, grid, options);
        fit.group_label = groups.labels[g];
        fits.push_back(std::move(fit));
    }
    return fits;
}

std::vector<NetSurvivalFit> fit_net_survival(const Cohort& cohort, const RateTable& table,
                                             const AxisBinding& binding, Method method,
                                             const FormulaSpec& formula, const DailyGrid& grid,
                                             const FitOptions& options) {
    const auto bound = bind_axes(cohort, table, binding);
    return fit_net_survival(cohort, bound.lives, method, formula, grid, options);
}

std::vector<SurvivalFit> kaplan_meier(const Cohort& cohort, const FormulaSpec& formula, const DailyGrid& grid) {
    const Grouping groups = fit_grouping(cohort, formula);
    std::vector<SurvivalFit> fits;
    for (std::size_t g = 0; g < groups.labels.size(); ++g) {
        auto fit = kaplan_meier(cohort, groups.members[g], grid);
        fit.group_label = groups.labels[g];
        fits.push_back(std::move(fit));
    }
    return fits;
}

ConfidenceBand confint(const NetSurvivalFit& fit, double level) {
    if (!(level > 0 && level < 1)) throw Error(ErrorCode::Domain, "confidence level must lie in (0, 1)");
    const double z = normal_quantile(1.0 - level / 2.0);
    const Eigen::ArrayXd spread = z * fit.var_cum.array().sqrt();
    return {fit.S.array() * (-spread).exp(), fit.S.array() * spread.exp()};
}

} // namespace netsurv
