#include "netsurv/nessie.hpp"

#include <cmath>
#include <cstdint>

#include "netsurv/error.hpp"
#include "netsurv/life.hpp"
#include "netsurv/summation.hpp"

namespace netsurv {

namespace {

template <typename Fn>
void for_each_patient(std::size_t n, unsigned threads, Fn&& fn) {
    const std::size_t block = patient_block_size(n);
    const std::size_t n_blocks = (n + block - 1) / block;
    parallel_for_blocks(n_blocks, threads, [&](std::size_t b) {
        const std::size_t end = std::min(n, (b + 1) * block);
        for (std::size_t i = b * block; i < end; ++i) fn(i);
    });
}

} // namespace

Eigen::VectorXd default_time_points(const Cohort& cohort) {
    const double max_t = cohort.size() ? cohort.time.maxCoeff() : 0.0;
    const auto last = static_cast<Eigen::Index>(std::floor(max_t / kDaysPerYear));
    return Eigen::VectorXd::LinSpaced(last + 1, 0.0, static_cast<double>(last));
}

Eigen::MatrixXd expected_sample_size(std::span<const Life> lives, const Grouping& groups,
                                     const Eigen::VectorXd& time_points, unsigned threads) {
    for (Eigen::Index t = 0; t < time_points.size(); ++t) {
        if (!(time_points[t] >= 0) || (t > 0 && time_points[t] < time_points[t - 1])) {
            throw Error(ErrorCode::Domain, "time points must be sorted and non-negative");
        }
    }
    const auto n_times = static_cast<std::size_t>(time_points.size());
    const std::size_t n = lives.size();

    // Each survival is rounded to a multiple of 2^-bits; n such values sum
    // without rounding in both int64 and double.
    const int bits = 53 - static_cast<int>(std::ceil(std::log2(static_cast<double>(n) + 1.0)));
    std::vector<std::int64_t> quanta(n * n_times);
    for_each_patient(n, threads, [&](std::size_t i) {
        HazardWalk<double> walk(lives[i]);
        for (std::size_t t = 0; t < n_times; ++t) {
            const double surv =
                std::exp(-walk.cumulative_hazard(time_points[static_cast<Eigen::Index>(t)] * kDaysPerYear));
            quanta[i * n_times + t] = std::llround(std::ldexp(surv, bits));
        }
    });

    Eigen::MatrixXd ess(static_cast<Eigen::Index>(n_times), static_cast<Eigen::Index>(groups.labels.size()));
    for (std::size_t g = 0; g < groups.labels.size(); ++g) {
        for (std::size_t t = 0; t < n_times; ++t) {
            std::int64_t total = 0;
            for (auto i : groups.members[g]) total += quanta[i * n_times + t];
            ess(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(g)) =
                std::ldexp(static_cast<double>(total), -bits);
        }
    }
    return ess;
}

Eigen::VectorXd expected_lifetime(std::span<const Life> lives, const Grouping& groups, unsigned threads) {
    std::vector<double> lifetimes(lives.size());
    for_each_patient(lives.size(), threads, [&](std::size_t i) { lifetimes[i] = expectation(lives[i]); });

    Eigen::VectorXd elt(static_cast<Eigen::Index>(groups.labels.size()));
    for (std::size_t g = 0; g < groups.labels.size(); ++g) {
        CompensatedSum sum;
        for (auto i : groups.members[g]) sum.add(lifetimes[i]);
        elt[static_cast<Eigen::Index>(g)] = sum.value() / static_cast<double>(groups.members[g].size()) / kDaysPerYear;
    }
    return elt;
}

NessieResult nessie(const Cohort& cohort, std::span<const Life> lives, const FormulaSpec& formula,
                    const Eigen::VectorXd& time_points, unsigned threads) {
    validate_formula(formula, cohort);
    if (lives.size() != cohort.size()) {
        throw Error(ErrorCode::InvalidArgument, "one population life per patient is required");
    }
    std::vector<std::string> columns = formula.group_cols;
    columns.insert(columns.end(), formula.strata_cols.begin(), formula.strata_cols.end());
    const Grouping groups = make_grouping(cohort, columns);

    NessieResult out;
    out.groups = groups.labels;
    out.time_points = time_points;
    out.ess = expected_sample_size(lives, groups, time_points, threads);
    out.elt = expected_lifetime(lives, groups, threads);
    return out;
}

NessieResult nessie(const Cohort& cohort, const RateTable& table, const AxisBinding& binding,
                    const FormulaSpec& formula, const Eigen::VectorXd& time_points, unsigned threads) {
    const auto bound = bind_axes(cohort, table, binding);
    return nessie(cohort, bound.lives, formula, time_points, threads);
}

} // namespace netsurv
