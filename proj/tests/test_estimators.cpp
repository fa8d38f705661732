#include <doctest.h>

#include <numeric>
#include <random>

#include "netsurv/distributions.hpp"
#include "netsurv/error.hpp"
#include "netsurv/estimators.hpp"
#include "oracles.hpp"

using namespace netsurv;

namespace {

Cohort simple_cohort(std::vector<double> times, std::vector<int> status) {
    const auto n = static_cast<Eigen::Index>(times.size());
    Eigen::VectorXi st(n);
    for (Eigen::Index i = 0; i < n; ++i) st[i] = status[static_cast<std::size_t>(i)];
    return make_cohort(Eigen::Map<Eigen::VectorXd>(times.data(), n), st, Eigen::VectorXd::Constant(n, 60 * kDaysPerYear),
                       Eigen::VectorXd::Constant(n, 2000 * kDaysPerYear));
}

std::vector<Life> lives_for(const Cohort& c, const BasicRateTable& table) {
    std::vector<Life> lives;
    for (std::size_t i = 0; i < c.size(); ++i) {
        lives.push_back(Life{&table, c.age[static_cast<Eigen::Index>(i)], c.date[static_cast<Eigen::Index>(i)]});
    }
    return lives;
}

const FormulaSpec kOverall = parse_formula("Surv(time,status) ~ 1");

// Straightforward evaluation of the three estimators from dense per-patient
// population terms computed with the forward-integration oracle.
Eigen::VectorXd oracle_increments(const Cohort& c, const std::vector<Life>& lives, Method method, int t_max) {
    const auto n = c.size();
    std::vector<std::vector<double>> surv(n, std::vector<double>(static_cast<std::size_t>(t_max)));
    std::vector<std::vector<double>> inc(n, std::vector<double>(static_cast<std::size_t>(t_max)));
    for (std::size_t i = 0; i < n; ++i) {
        oracle::ForwardHazard h(lives[i]);
        double prev = 0.0;
        for (int s = 1; s <= t_max; ++s) {
            const double cur = h.at(s);
            surv[i][static_cast<std::size_t>(s - 1)] = std::exp(-prev);
            inc[i][static_cast<std::size_t>(s - 1)] = cur - prev;
            prev = cur;
        }
    }
    Eigen::VectorXd d = Eigen::VectorXd::Zero(t_max);
    for (int s = 1; s <= t_max; ++s) {
        const auto j = static_cast<std::size_t>(s - 1);
        long double dn = 0, y = 0, wdn = 0, wy = 0, wexp = 0, yexp = 0, sexp = 0, ssum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = c.time[static_cast<Eigen::Index>(i)];
            const bool at_risk = t > s - 1;
            const bool died = c.status[static_cast<Eigen::Index>(i)] == 1 && t > s - 1 && t <= s;
            const double sp = surv[i][j];
            if (at_risk) {
                y += 1;
                wy += 1 / sp;
                wexp += inc[i][j] / sp;
                yexp += inc[i][j];
            }
            if (died) {
                dn += 1;
                wdn += 1 / sp;
            }
            ssum += sp;
            sexp += sp * inc[i][j];
        }
        if (y == 0) continue;
        switch (method) {
        case Method::PoharPerme: d[s - 1] = static_cast<double>((wdn - wexp) / wy); break;
        case Method::EdererI: d[s - 1] = static_cast<double>(dn / y - sexp / ssum); break;
        case Method::EdererII: d[s - 1] = static_cast<double>((dn - yexp) / y); break;
        }
    }
    return d;
}

} // namespace

TEST_CASE("counting increments") {
    const DailyGrid grid{10};
    const auto one = counting_increments(simple_cohort({5.0}, {1}), grid);
    for (int s = 1; s <= 10; ++s) {
        CHECK(one.events[s - 1] == (s == 5 ? 1.0 : 0.0));
        CHECK(one.at_risk[s - 1] == (s <= 5 ? 1.0 : 0.0));
    }
    const auto censored = counting_increments(simple_cohort({3.2, 7.0}, {0, 0}), grid);
    CHECK(censored.events.isZero());
    CHECK(censored.at_risk[3] == 2.0);
    CHECK(censored.at_risk[4] == 1.0);
    CHECK(censored.at_risk[7] == 0.0);

    std::mt19937_64 rng(21);
    const Cohort c = oracle::random_cohort(rng, 50, 400.0);
    const auto inc = counting_increments(c, DailyGrid::covering(c));
    CHECK(inc.events.sum() == c.status.sum());
    CHECK(inc.at_risk[0] == static_cast<double>((c.time.array() > 0).count()));
}

TEST_CASE("daily grid and day mapping") {
    const Cohort c = simple_cohort({0.5, 12.0, 11.2}, {1, 0, 1});
    CHECK(DailyGrid::covering(c).t_max == 12);
    CHECK(DailyGrid::covering(simple_cohort({0.0}, {0})).t_max == 1);
    const DailyGrid g{5};
    CHECK(at_risk_days(0.0, g) == 0);
    CHECK(at_risk_days(2.0, g) == 2);
    CHECK(at_risk_days(2.1, g) == 3);
    CHECK(at_risk_days(9.0, g) == 5);
    CHECK(event_day(2.0, g) == 2);
    CHECK(event_day(2.1, g) == 3);
    CHECK(event_day(9.0, g) == 0);
}

TEST_CASE("Kaplan-Meier") {
    const DailyGrid grid{8};
    const auto single = kaplan_meier(simple_cohort({5.0}, {1}), grid);
    for (int s = 1; s <= 8; ++s) CHECK(single.S[s - 1] == (s >= 5 ? 0.0 : 1.0));

    const auto none = kaplan_meier(simple_cohort({3.0, 6.0}, {0, 0}), grid);
    CHECK((none.S.array() == 1.0).all());
    CHECK(none.var_cum.isZero());

    std::mt19937_64 rng(22);
    for (int rep = 0; rep < 20; ++rep) {
        const Cohort c = oracle::random_cohort(rng, 10, 50.0);
        const DailyGrid g = DailyGrid::covering(c);
        const auto fit = kaplan_meier(c, g);
        const Eigen::VectorXd expected = oracle::product_limit(c, g.t_max);
        CHECK((fit.S.array() == expected.array()).all());
        // Greenwood, skipping days where every remaining patient dies.
        const auto inc = counting_increments(c, g);
        double v = 0;
        for (int s = 0; s < g.t_max; ++s) {
            if (inc.at_risk[s] > inc.events[s]) v += inc.events[s] / (inc.at_risk[s] * (inc.at_risk[s] - inc.events[s]));
            CHECK(fit.var_cum[s] == doctest::Approx(v).epsilon(1e-14));
        }
    }
    CHECK_THROWS_AS((void)kaplan_meier(simple_cohort({1.0}, {1}), std::span<const std::size_t>{}, grid), Error);
}

TEST_CASE("population terms") {
    const BasicRateTable zero(Eigen::MatrixXd::Zero(111, 81), 0, 110, 1950, 2030);
    const BasicRateTable constant(Eigen::MatrixXd::Constant(111, 81, 3e-4), 0, 110, 1950, 2030);
    const Cohort c = simple_cohort({100, 200, 300}, {1, 0, 1});
    const DailyGrid grid{3000};

    const auto z = population_terms(lives_for(c, zero), grid);
    CHECK((z.survival_before.array() == 1.0).all());
    CHECK(z.increment.isZero());

    const auto k = population_terms(lives_for(c, constant), grid);
    CHECK((k.increment.array() - 3e-4).abs().maxCoeff() < 1e-15);
    CHECK(k.survival_before(0, 0) == 1.0);
    CHECK(k.survival_before(2, 1000) == doctest::Approx(std::exp(-0.3)).epsilon(1e-13));

    std::mt19937_64 rng(23);
    const auto table = oracle::random_table(rng, 0, 110, 1950, 2030, 1e-6, 1e-3, 0.1);
    const auto terms = population_terms(lives_for(c, table), grid);
    for (Eigen::Index i = 0; i < 3; ++i) {
        const Life l{&table, c.age[i], c.date[i]};
        double sum = 0;
        for (int s = 1; s <= grid.t_max; ++s) {
            sum += terms.increment(i, s - 1);
            if (s % 250 == 0) CHECK(std::abs(sum - cumulative_hazard(l, static_cast<double>(s))) < 1e-12);
        }
    }

    CHECK_THROWS_AS((void)population_terms(lives_for(c, zero), grid, 100), Error);
}

TEST_CASE("estimators match a brute-force oracle") {
    std::mt19937_64 rng(24);
    const auto table = oracle::random_table(rng, 0, 110, 1950, 2030, 1e-5, 2e-3, 0.05);
    const Cohort c = oracle::random_cohort(rng, 60, 900.0);
    const auto lives = lives_for(c, table);
    const DailyGrid grid = DailyGrid::covering(c);
    for (Method m : {Method::PoharPerme, Method::EdererI, Method::EdererII}) {
        CAPTURE(method_name(m));
        const auto fit = fit_net_survival(c, lives, m, kOverall, grid).front();
        const Eigen::VectorXd expected = oracle_increments(c, lives, m, grid.t_max);
        for (int s = 0; s < grid.t_max; ++s) CHECK(fit.dLambda[s] == doctest::Approx(expected[s]).epsilon(1e-10).scale(1e-12));
        for (int s = 1; s < grid.t_max; ++s) CHECK(fit.var_cum[s] >= fit.var_cum[s - 1]);
        CHECK(fit.S[0] == 1.0 - fit.dLambda[0]);
    }
}

TEST_CASE("zero population hazard reduces every estimator to Kaplan-Meier") {
    const BasicRateTable zero(Eigen::MatrixXd::Zero(111, 81), 0, 110, 1950, 2030);
    std::mt19937_64 rng(25);
    for (int rep = 0; rep < 10; ++rep) {
        const Cohort c = oracle::random_cohort(rng, 200, 2000.0);
        const auto lives = lives_for(c, zero);
        const DailyGrid grid = DailyGrid::covering(c);
        const auto km = kaplan_meier(c, grid);
        for (Method m : {Method::PoharPerme, Method::EdererI, Method::EdererII}) {
            const auto fit = fit_net_survival(c, lives, m, kOverall, grid).front();
            CHECK((fit.S.array() == km.S.array()).all());
        }
    }
}

TEST_CASE("single death limit") {
    const BasicRateTable zero(Eigen::MatrixXd::Zero(111, 81), 0, 110, 1950, 2030);
    const Cohort c = simple_cohort({7.0}, {1});
    const auto lives = lives_for(c, zero);
    for (Method m : {Method::PoharPerme, Method::EdererI, Method::EdererII}) {
        const auto fit = fit_net_survival(c, lives, m, kOverall, DailyGrid{10}).front();
        CHECK(fit.dLambda[6] == 1.0);
        for (int s = 7; s <= 10; ++s) CHECK(fit.S[s - 1] == 0.0);
        CHECK(fit.S[5] == 1.0);
    }
}

TEST_CASE("shared life makes Pohar Perme equal Ederer II") {
    std::mt19937_64 rng(26);
    const auto table = oracle::random_table(rng, 0, 110, 1950, 2030, 1e-5, 2e-3);
    Cohort c = oracle::random_cohort(rng, 300, 3000.0);
    c.age.setConstant(55.3 * kDaysPerYear);
    c.date.setConstant(1993.7 * kDaysPerYear);
    const auto lives = lives_for(c, table);
    const DailyGrid grid = DailyGrid::covering(c);
    const auto pp = fit_net_survival(c, lives, Method::PoharPerme, kOverall, grid).front();
    const auto e2 = fit_net_survival(c, lives, Method::EdererII, kOverall, grid).front();
    CHECK((pp.dLambda - e2.dLambda).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("negative excess increments are kept") {
    // High population hazard and no deaths on most days.
    const BasicRateTable high(Eigen::MatrixXd::Constant(111, 81, 1e-3), 0, 110, 1950, 2030);
    const Cohort c = simple_cohort({50, 60, 70}, {0, 1, 0});
    const auto fit = fit_net_survival(c, lives_for(c, high), Method::PoharPerme, kOverall, DailyGrid{70}).front();
    CHECK(fit.dLambda[10] < 0);
    CHECK(fit.S[10] > 1.0);
}

TEST_CASE("grouped fits and errors") {
    std::mt19937_64 rng(27);
    const auto table = oracle::random_table(rng, 0, 110, 1950, 2030, 1e-5, 1e-3);
    const Cohort c = oracle::random_cohort(rng, 120, 800.0, 3);
    const auto lives = lives_for(c, table);
    const DailyGrid grid = DailyGrid::covering(c);
    const auto fits = fit_net_survival(c, lives, Method::PoharPerme, parse_formula("Surv(time,status) ~ group"), grid);
    REQUIRE(fits.size() == 3);
    CHECK(fits[0].group_label == "group=g0");
    const auto groups = make_grouping(c, {"group"});
    const auto direct = fit_group(c, lives, groups.members[2], Method::PoharPerme, grid);
    CHECK((direct.S.array() == fits[2].S.array()).all());

    const auto kms = kaplan_meier(c, parse_formula("Surv(time,status) ~ group + Strata(sex)"), grid);
    CHECK(kms.size() == 6);
    CHECK(kms[0].group_label == "group=g0,sex=female");

    try {
        (void)fit_group(c, lives, std::vector<std::size_t>{}, Method::EdererI, grid);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyGroup);
    }
    const Cohort dead_on_arrival = simple_cohort({0.0, 0.0}, {1, 0});
    try {
        (void)fit_net_survival(dead_on_arrival, lives_for(dead_on_arrival, table), Method::PoharPerme, kOverall,
                               DailyGrid::covering(dead_on_arrival));
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoAtRisk);
    }
    CHECK_THROWS_AS((void)parse_method("hakulinen"), Error);
    CHECK(std::string(method_name(parse_method("ederer1"))) == "ederer1");
}

TEST_CASE("fits do not depend on thread count") {
    std::mt19937_64 rng(28);
    const auto table = oracle::random_table(rng, 0, 110, 1950, 2030, 1e-5, 1e-3);
    const Cohort c = oracle::random_cohort(rng, 3000, 1500.0);
    const auto lives = lives_for(c, table);
    const DailyGrid grid = DailyGrid::covering(c);
    for (Method m : {Method::PoharPerme, Method::EdererI, Method::EdererII}) {
        const auto one = fit_net_survival(c, lives, m, kOverall, grid, {1}).front();
        for (unsigned threads : {2u, 3u, 8u}) {
            const auto many = fit_net_survival(c, lives, m, kOverall, grid, {threads}).front();
            CHECK((one.dLambda.array() == many.dLambda.array()).all());
            CHECK((one.var_cum.array() == many.var_cum.array()).all());
        }
    }
}

TEST_CASE("confidence bands") {
    NetSurvivalFit fit;
    fit.grid = DailyGrid{3};
    fit.dLambda = Eigen::Vector3d(0.01, 0.02, -0.01);
    fit.var_cum = Eigen::Vector3d::Zero();
    fit.S = Eigen::Vector3d(0.99, 0.99 * 0.98, 0.99 * 0.98 * 1.01);
    auto band = confint(fit);
    CHECK((band.lower.array() == fit.S.array()).all());
    CHECK((band.upper.array() == fit.S.array()).all());

    // Day-1 and last-day rows of a reference fit.
    fit.grid = DailyGrid{2};
    fit.S = Eigen::Vector2d(0.997105, 0.391059);
    fit.dLambda = Eigen::Vector2d(0.00289493, -0.00054201);
    fit.var_cum = Eigen::Vector2d(0.000710632 * 0.000710632, 0.740969 * 0.740969);
    band = confint(fit, 0.05);
    CHECK(band.lower[0] == doctest::Approx(0.995717).epsilon(1e-6));
    CHECK(band.upper[0] == doctest::Approx(0.998495).epsilon(1e-6));
    CHECK(band.lower[1] == doctest::Approx(0.0915227).epsilon(1e-6));
    CHECK(band.upper[1] == doctest::Approx(1.67092).epsilon(1e-6));

    const auto narrow = confint(fit, 0.32);
    CHECK((narrow.lower.array() >= band.lower.array()).all());
    CHECK((narrow.upper.array() <= band.upper.array()).all());
    CHECK((band.lower.array() <= fit.S.array()).all());
    CHECK((fit.S.array() <= band.upper.array()).all());
    CHECK_THROWS_AS((void)confint(fit, 1.5), Error);
}

TEST_CASE("normal and chi-square distribution functions") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-12));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-14));
    for (double p : {1e-8, 0.01, 0.2, 0.5, 0.77, 0.999}) CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-13));

    CHECK(chisq_sf(0, 1) == 1.0);
    CHECK(std::abs(chisq_sf(3.841459, 1) - 0.05) < 1e-6);
    CHECK(std::abs(chisq_sf(4.19413, 1) - 0.0405641) < 1e-6);
    for (int dof : {1, 2, 3, 4, 7, 10}) {
        for (double x : {1e-3, 0.5, 1.0, 3.0, 10.0, 40.0, 200.0}) {
            CAPTURE(dof);
            CAPTURE(x);
            const double expected = oracle::chisq_sf_closed(x, dof);
            CHECK(std::abs(chisq_sf(x, dof) - expected) < 1e-12 + 1e-12 * expected);
        }
    }
}
