#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <random>

#include "netsurv/distributions.hpp"
#include "netsurv/error.hpp"
#include "netsurv/graffeo.hpp"
#include "oracles.hpp"

using namespace netsurv;

namespace {

std::vector<Life> lives_for(const Cohort& c, const BasicRateTable& table) {
    std::vector<Life> lives;
    for (Eigen::Index i = 0; i < c.time.size(); ++i) lives.push_back(Life{&table, c.age[i], c.date[i]});
    return lives;
}

const BasicRateTable& zero_table() {
    static const BasicRateTable t(Eigen::MatrixXd::Zero(111, 81), 0, 110, 1950, 2030);
    return t;
}

std::vector<int> codes_of(const Cohort& c, const std::string& column) {
    return c.column(column).codes;
}

} // namespace

TEST_CASE("chi-square tail") {
    CHECK(chisq_sf(0.0, 1) == 1.0);
    CHECK(std::abs(chisq_sf(3.841459, 1) - 0.05) < 1e-6);
    CHECK(std::abs(chisq_sf(4.19413, 1) - 0.0405641) < 1e-6);
    for (double dof : {1.0, 2.0, 3.0, 5.0, 9.0}) {
        boost::math::chi_squared dist(dof);
        for (double x : {0.01, 0.7, 2.0, 6.5, 15.0, 33.0}) {
            const double expected = boost::math::cdf(boost::math::complement(dist, x));
            CHECK(std::abs(chisq_sf(x, static_cast<int>(dof)) - expected) <= 1e-12 + 1e-12 * expected);
        }
        // Quantile inversion round trip.
        const double x = boost::math::quantile(boost::math::complement(dist, 0.05));
        CHECK(std::abs(chisq_sf(x, static_cast<int>(dof)) - 0.05) < 1e-12);
    }
}

TEST_CASE("zero population hazard reduces to the log-rank test") {
    std::mt19937_64 rng(31);
    for (int k : {2, 4}) {
        for (int rep = 0; rep < 5; ++rep) {
            const Cohort c = oracle::random_cohort(rng, 150, 1200.0, k);
            const auto lives = lives_for(c, zero_table());
            const auto result = graffeo_test(c, lives, parse_formula("Surv(time,status) ~ group"), DailyGrid::covering(c));
            const auto expected = oracle::log_rank(c.time, c.status, codes_of(c, "group"), k);
            REQUIRE(result.dof == k - 1);
            CHECK(std::abs(result.statistic - expected.statistic) <= 1e-10 * std::max(1.0, expected.statistic));
            for (int g = 0; g < k; ++g) {
                CHECK(result.per_group_Z[g] ==
                      doctest::Approx(expected.observed_minus_expected[static_cast<std::size_t>(g)]).epsilon(1e-10));
            }
            CHECK(std::abs(result.p_value - oracle::chisq_sf_closed(expected.statistic, k - 1)) < 1e-9);
        }
    }
}

TEST_CASE("test statistic invariants") {
    std::mt19937_64 rng(32);
    const auto table = oracle::random_table(rng, 0, 110, 1950, 2030, 1e-5, 2e-3);
    const Cohort c = oracle::random_cohort(rng, 400, 2500.0, 3);
    const auto lives = lives_for(c, table);
    const DailyGrid grid = DailyGrid::covering(c);
    const auto result = graffeo_test(c, lives, parse_formula("Surv(time,status) ~ group"), grid);

    CHECK(std::abs(result.per_group_Z.sum()) < 1e-10);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(result.covariance);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    CHECK(result.statistic >= 0);
    CHECK((result.covariance - result.covariance.transpose()).cwiseAbs().maxCoeff() == 0.0);

    // Relabelling the groups leaves the statistic unchanged.
    const auto& col = c.column("group");
    std::vector<std::string> renamed;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const std::string& v = col.value(i);
        renamed.push_back(v == "g0" ? "z" : v == "g1" ? "a" : "m");
    }
    Cohort relabelled = c;
    relabelled.add_column(make_column("arm", renamed));
    const auto other = graffeo_test(relabelled, lives, parse_formula("Surv(time,status) ~ arm"), grid);
    CHECK(std::abs(other.statistic - result.statistic) <= 1e-12 * std::max(1.0, result.statistic));

    // A constant stratum changes nothing.
    Cohort single = c;
    single.add_column(make_column("region", std::vector<std::string>(c.size(), "north")));
    const auto one_stratum = graffeo_test(single, lives, parse_formula("Surv(time,status) ~ group + Strata(region)"), grid);
    CHECK(one_stratum.statistic == result.statistic);
    CHECK(one_stratum.p_value == result.p_value);
}

TEST_CASE("identical groups give a null statistic") {
    std::mt19937_64 rng(33);
    const auto table = oracle::random_table(rng, 0, 110, 1950, 2030, 1e-5, 2e-3);
    const Cohort half = oracle::random_cohort(rng, 80, 1000.0);
    const auto n = half.time.size();
    Eigen::VectorXd time(2 * n), age(2 * n), date(2 * n);
    Eigen::VectorXi status(2 * n);
    time << half.time, half.time;
    age << half.age, half.age;
    date << half.date, half.date;
    status << half.status, half.status;
    std::vector<std::string> arm(static_cast<std::size_t>(2 * n), "a");
    std::fill(arm.begin() + n, arm.end(), "b");
    const Cohort c = make_cohort(time, status, age, date, {{"arm", arm}});
    const auto lives = lives_for(c, table);
    const auto result = graffeo_test(c, lives, parse_formula("Surv(time,status) ~ arm"), DailyGrid::covering(c));
    CHECK(std::abs(result.statistic) < 1e-20);
    CHECK(result.p_value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("stratified test sums over strata") {
    std::mt19937_64 rng(34);
    const Cohort c = oracle::random_cohort(rng, 300, 1500.0, 2);
    const auto lives = lives_for(c, zero_table());
    const DailyGrid grid = DailyGrid::covering(c);
    const auto strat = graffeo_test(c, lives, parse_formula("Surv(time,status) ~ group + Strata(sex)"), grid);
    CHECK(strat.strata == std::vector<std::string>{"sex=female", "sex=male"});
    Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(2, 2);
    for (const char* sex : {"female", "male"}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (c.column("sex").value(i) == sex) idx.push_back(i);
        }
        const auto n = static_cast<Eigen::Index>(idx.size());
        Eigen::VectorXd t(n), a(n), d(n);
        Eigen::VectorXi s(n);
        std::vector<std::string> g;
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto i = idx[static_cast<std::size_t>(j)];
            t[j] = c.time[static_cast<Eigen::Index>(i)];
            s[j] = c.status[static_cast<Eigen::Index>(i)];
            a[j] = c.age[static_cast<Eigen::Index>(i)];
            d[j] = c.date[static_cast<Eigen::Index>(i)];
            g.push_back(c.column("group").value(i));
        }
        const Cohort sub = make_cohort(t, s, a, d, {{"group", g}});
        const auto part = graffeo_test(sub, lives_for(sub, zero_table()), parse_formula("Surv(time,status) ~ group"),
                                       grid);
        z += part.per_group_Z;
        sigma += part.covariance;
    }
    CHECK((strat.per_group_Z - z).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((strat.covariance - sigma).cwiseAbs().maxCoeff() < 1e-10);
    const double expected = z[0] * z[0] / sigma(0, 0);
    CHECK(strat.statistic == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("arity and exclusion") {
    std::mt19937_64 rng(35);
    const Cohort c = oracle::random_cohort(rng, 50, 500.0, 1);
    const auto lives = lives_for(c, zero_table());
    const DailyGrid grid = DailyGrid::covering(c);
    try {
        (void)graffeo_test(c, lives, parse_formula("Surv(time,status) ~ group"), grid);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Arity);
    }
    try {
        (void)graffeo_test(c, lives, parse_formula("Surv(time,status) ~ 1"), grid);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Arity);
    }

    // A group whose patients all have zero follow-up carries no weight.
    Cohort extra = oracle::random_cohort(rng, 60, 500.0, 2);
    std::vector<std::string> arm;
    for (std::size_t i = 0; i < extra.size(); ++i) arm.push_back(extra.column("group").value(i));
    for (Eigen::Index i = 0; i < 5; ++i) {
        extra.time[i] = 0.0;
        arm[static_cast<std::size_t>(i)] = "late";
    }
    extra.add_column(make_column("arm", arm));
    const auto result = graffeo_test(extra, lives_for(extra, zero_table()), parse_formula("Surv(time,status) ~ arm"),
                                     DailyGrid::covering(extra));
    CHECK(result.dof == 1);
    CHECK(result.groups.size() == 2);
    REQUIRE(result.warnings.size() == 1);
    CHECK(result.warnings[0].find("late") != std::string::npos);
}

TEST_CASE("reduced quadratic form") {
    Eigen::Vector3d z(1.0, -0.5, -0.5);
    Eigen::Matrix3d sigma;
    sigma << 2, -1, -1, -1, 2, -1, -1, -1, 2;
    const auto full = reduced_quadratic_form(z, sigma, 2);
    CHECK(full.dof == 2);
    CHECK_FALSE(full.pseudo_inverse);
    // [1, -0.5] solved against [[2,-1],[-1,2]]
    CHECK(full.statistic == doctest::Approx(0.5).epsilon(1e-14));

    // Rank-deficient reduced matrix falls back to the pseudo-inverse.
    Eigen::Matrix3d degenerate;
    degenerate << 1, 1, -2, 1, 1, -2, -2, -2, 4;
    const Eigen::Vector3d zz(1.0, 1.0, -2.0);
    const auto pinv = reduced_quadratic_form(zz, degenerate, 2);
    CHECK(pinv.pseudo_inverse);
    CHECK(pinv.dof == 1);
    CHECK(pinv.statistic == doctest::Approx(1.0).epsilon(1e-12));
}
