#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "netsurv/binding.hpp"
#include "netsurv/cohort.hpp"
#include "netsurv/formula.hpp"
#include "netsurv/life.hpp"

namespace netsurv {

/// Daily grid s = 1..t_max. Per-day vectors below are indexed by s - 1.
struct DailyGrid {
    int t_max = 1;

    /// ceil(max follow-up), at least one day.
    static DailyGrid covering(const Cohort& cohort);

    bool operator==(const DailyGrid&) const = default;
};

/// Number of days patient time `t` is at risk on a grid: days s with
/// t > s - 1, i.e. ceil(t), capped at t_max.
inline int at_risk_days(double t, const DailyGrid& grid) {
    if (!(t > 0)) return 0;
    const double c = std::ceil(t);
    return c >= grid.t_max ? grid.t_max : static_cast<int>(c);
}

/// Day on which an event at time t is counted, s - 1 < t <= s; 0 when the
/// event falls outside the grid.
inline int event_day(double t, const DailyGrid& grid) {
    if (!(t > 0)) return 0;
    const double c = std::ceil(t);
    return c > grid.t_max ? 0 : static_cast<int>(c);
}

enum class Method { PoharPerme, EdererI, EdererII };

std::string_view method_name(Method method);
/// Accepts pohar-perme, ederer1, ederer2; throws InvalidArgument listing them.
Method parse_method(std::string_view name);

/// Aggregated counting processes: events(s) = #{deaths in (s-1, s]} and
/// at_risk(s) = #{T_i > s - 1}.
struct CountingIncrements {
    Eigen::VectorXd events;
    Eigen::VectorXd at_risk;
};

CountingIncrements counting_increments(const Cohort& cohort, std::span<const std::size_t> members,
                                       const DailyGrid& grid);
CountingIncrements counting_increments(const Cohort& cohort, const DailyGrid& grid);

/// Overall survival: Nelson-Aalen increments, Greenwood cumulative variance
/// and the product-limit curve.
struct SurvivalFit {
    DailyGrid grid;
    std::string group_label = "all";
    Eigen::VectorXd dLambda;
    Eigen::VectorXd var_cum;
    Eigen::VectorXd S;
};

SurvivalFit kaplan_meier(const Cohort& cohort, std::span<const std::size_t> members, const DailyGrid& grid);
SurvivalFit kaplan_meier(const Cohort& cohort, const DailyGrid& grid);

/// Streams a life's population terms day by day: for s = 1, 2, ... yields the
/// cumulative hazard at s - 1 (so S_P(s-) = exp(-cumhaz_before)) and the exact
/// hazard integral over (s - 1, s].
class PopulationStream {
public:
    struct Day {
        double cumhaz_before;
        double increment;
    };

    explicit PopulationStream(const Life& life) : walk_(life) {}

    Day next() {
        ++day_;
        const double current = walk_.cumulative_hazard(static_cast<double>(day_));
        const Day d{previous_, current - previous_};
        previous_ = current;
        return d;
    }

private:
    HazardWalk<double> walk_;
    long day_ = 0;
    double previous_ = 0.0;
};

/// Dense per-patient population terms (rows = lives, columns = days).
struct PopulationTerms {
    Eigen::MatrixXd survival_before; // S_P(s-)
    Eigen::MatrixXd increment;       // integral of the hazard over (s-1, s]
};

/// Materialises population terms; throws InvalidArgument when
/// lives * t_max exceeds `max_cells` (use PopulationStream instead).
PopulationTerms population_terms(std::span<const Life> lives, const DailyGrid& grid,
                                 std::size_t max_cells = std::size_t{1} << 24);

/// Daily sums over a patient subset consumed by the estimators and the test.
/// "Weighted" sums use the inverse population survival 1 / S_P(s-).
struct PopulationSums {
    Eigen::VectorXd events;            // sum dN
    Eigen::VectorXd at_risk;           // sum Y
    Eigen::VectorXd weighted_events;   // sum dN / S
    Eigen::VectorXd weighted_expected; // sum Y dLambda_P / S
    Eigen::VectorXd weighted_at_risk;  // sum Y / S
    Eigen::VectorXd weighted2_events;  // sum dN / S^2
    Eigen::VectorXd expected;          // sum Y dLambda_P
    Eigen::VectorXd cohort_expected;   // sum over all patients S dLambda_P
    Eigen::VectorXd cohort_survival;   // sum over all patients S
};

struct SumsRequest {
    bool weighted = false;
    bool at_risk_expected = false;
    bool whole_cohort = false;
};

/// Patient loop with compensated per-day accumulation over a fixed block
/// partition; results are bit-identical for any thread count.
PopulationSums accumulate_population(const Cohort& cohort, std::span<const Life> lives,
                                     std::span<const std::size_t> members, const DailyGrid& grid,
                                     const SumsRequest& request, unsigned threads = 1);

struct NetSurvivalFit {
    DailyGrid grid;
    Method method = Method::PoharPerme;
    std::string group_label = "all";
    Eigen::VectorXd dLambda; // excess hazard increments, may be negative
    Eigen::VectorXd var_cum; // cumulative variance of the cumulative excess hazard
    Eigen::VectorXd S;       // net survival, product-limit over dLambda
};

struct FitOptions {
    unsigned threads = 1;
};

/// Fit one estimator on a patient subset. `lives` is indexed by patient.
NetSurvivalFit fit_group(const Cohort& cohort, std::span<const Life> lives, std::span<const std::size_t> members,
                         Method method, const DailyGrid& grid, const FitOptions& options = {});

/// One fit per observed combination of the formula's grouping and strata columns.
std::vector<NetSurvivalFit> fit_net_survival(const Cohort& cohort, std::span<const Life> lives, Method method,
                                             const FormulaSpec& formula, const DailyGrid& grid,
                                             const FitOptions& options = {});

std::vector<NetSurvivalFit> fit_net_survival(const Cohort& cohort, const RateTable& table,
                                             const AxisBinding& binding, Method method,
                                             const FormulaSpec& formula, const DailyGrid& grid,
                                             const FitOptions& options = {});

/// Matching Kaplan-Meier fits for the same grouping as fit_net_survival.
std::vector<SurvivalFit> kaplan_meier(const Cohort& cohort, const FormulaSpec& formula, const DailyGrid& grid);

/// Delta-method band on the log scale: S * exp(-+ z sigma), z the standard
/// normal quantile at 1 - level / 2. Bounds are not clipped to [0, 1].
struct ConfidenceBand {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

ConfidenceBand confint(const NetSurvivalFit& fit, double level = 0.05);

} // namespace netsurv
