#include "netsurv/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "netsurv/ratetable.hpp"

namespace netsurv {

Cohort synthetic_cohort(std::size_t n, int days, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto size = static_cast<Eigen::Index>(n);
    Eigen::VectorXd time(size), age(size), date(size);
    Eigen::VectorXi status(size);
    std::vector<std::string> sex(n), stage(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const int st = 1 + static_cast<int>(unit(rng) * 4.0);
        // Later stages die sooner; censoring is uniform over the window.
        const double event = -std::log(1.0 - unit(rng)) * 6000.0 / st;
        const double censor = days * (0.2 + 0.8 * unit(rng));
        const double t = std::min({event, censor, static_cast<double>(days)});
        time[k] = std::max(t, 0.5);
        status[k] = event <= std::min(censor, static_cast<double>(days)) ? 1 : 0;
        age[k] = (30.0 + 60.0 * unit(rng)) * kDaysPerYear;
        date[k] = (1994.0 + 6.0 * unit(rng)) * kDaysPerYear;
        sex[i] = unit(rng) < 0.5 ? "female" : "male";
        stage[i] = std::to_string(std::min(st, 4));
    }
    return make_cohort(std::move(time), std::move(status), std::move(age), std::move(date),
                       {{"sex", sex}, {"stage", stage}});
}

} // namespace netsurv
