#include <doctest.h>

#include <random>

#include "netsurv/crude.hpp"
#include "netsurv/error.hpp"
#include "oracles.hpp"

using namespace netsurv;

namespace {

std::vector<Life> lives_for(const Cohort& c, const BasicRateTable& table) {
    std::vector<Life> lives;
    for (Eigen::Index i = 0; i < c.time.size(); ++i) lives.push_back(Life{&table, c.age[i], c.date[i]});
    return lives;
}

const FormulaSpec kOverall = parse_formula("Surv(time,status) ~ 1");

} // namespace

TEST_CASE("crude mortality adds up exactly") {
    std::mt19937_64 rng(41);
    for (int rep = 0; rep < 10; ++rep) {
        const auto table = oracle::random_table(rng, 0, 110, 1950, 2030, 1e-5, 3e-3);
        const Cohort c = oracle::random_cohort(rng, 300, 3000.0);
        const DailyGrid grid = DailyGrid::covering(c);
        const auto net = fit_net_survival(c, lives_for(c, table), Method::PoharPerme, kOverall, grid).front();
        const auto km = kaplan_meier(c, grid);
        const auto crude = crude_mortality(net, km);
        for (Eigen::Index s = 0; s < grid.t_max; ++s) {
            CHECK(crude.excess[s] + crude.population[s] == crude.one_minus_S_O[s]);
            CHECK(crude.one_minus_S_O[s] == 1.0 - km.S[s]);
        }
        // The excess part only moves on days with an excess increment.
        for (Eigen::Index s = 1; s < grid.t_max; ++s) {
            if (net.dLambda[s] == 0.0) CHECK(crude.excess[s] == crude.excess[s - 1]);
        }
        // Recurrence against the overall survival of the previous day.
        double expected = 0.0, before = 1.0;
        for (Eigen::Index s = 0; s < grid.t_max; ++s) {
            expected += before * net.dLambda[s];
            before = km.S[s];
        }
        CHECK(crude.excess[grid.t_max - 1] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("zero population hazard puts all mortality in the excess part") {
    const BasicRateTable zero(Eigen::MatrixXd::Zero(111, 81), 0, 110, 1950, 2030);
    std::mt19937_64 rng(42);
    const Cohort c = oracle::random_cohort(rng, 250, 2000.0);
    const DailyGrid grid = DailyGrid::covering(c);
    for (Method m : {Method::PoharPerme, Method::EdererII}) {
        const auto net = fit_net_survival(c, lives_for(c, zero), m, kOverall, grid).front();
        const auto crude = crude_mortality(net, kaplan_meier(c, grid));
        CHECK(crude.population.cwiseAbs().maxCoeff() < 1e-12);
        CHECK((crude.excess - crude.one_minus_S_O).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("crude mortality needs matching fits") {
    std::mt19937_64 rng(43);
    const auto table = oracle::random_table(rng, 0, 110, 1950, 2030);
    const Cohort c = oracle::random_cohort(rng, 40, 500.0);
    const auto net = fit_net_survival(c, lives_for(c, table), Method::PoharPerme, kOverall, DailyGrid{400}).front();
    try {
        (void)crude_mortality(net, kaplan_meier(c, DailyGrid{300}));
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::GridMismatch);
    }
    auto km = kaplan_meier(c, DailyGrid{400});
    km.group_label = "sex=male";
    CHECK_THROWS_AS((void)crude_mortality(net, km), Error);
}

TEST_CASE("crude mortality with excess far below zero") {
    // Population hazards above observed mortality push M_E below -(1 - S_O);
    // the sum is then off by at most one ulp of M_P.
    std::mt19937_64 rng(1006);
    const auto table = oracle::random_table(rng, 0, 110, 1950, 2030, 1e-6, 5e-3);
    const Cohort c = oracle::random_cohort(rng, 400, 5000.0, 3);
    const DailyGrid grid = DailyGrid::covering(c);
    const auto formula = parse_formula("Surv(time,status) ~ group");
    const auto nets = fit_net_survival(c, lives_for(c, table), Method::PoharPerme, formula, grid);
    const auto kms = kaplan_meier(c, formula, grid);
    int inexact = 0;
    for (std::size_t g = 0; g < nets.size(); ++g) {
        const auto crude = crude_mortality(nets[g], kms[g]);
        for (Eigen::Index s = 0; s < grid.t_max; ++s) {
            const double gap = std::abs(crude.excess[s] + crude.population[s] - crude.one_minus_S_O[s]);
            if (gap == 0.0) continue;
            ++inexact;
            CHECK(crude.excess[s] < -crude.one_minus_S_O[s]);
            CHECK(gap <= std::nextafter(crude.population[s], INFINITY) - crude.population[s]);
        }
    }
    CHECK(inexact > 0);
}
