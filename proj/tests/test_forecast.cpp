#include "lilee/error.hpp"
#include "lilee/forecast.hpp"

#include <doctest.h>

#include <random>

using namespace lilee;

namespace {

CovidLayer weekly_layer(const Eigen::VectorXd &b, const Eigen::VectorXd &k, int first_age) {
    CovidLayer l;
    l.country = "XXX";
    l.method = SeasonalMethod::NoSeasonal;
    l.ages = individual_ages({first_age, first_age + static_cast<int>(b.size()) - 1});
    l.grid = WeekGrid({2020, 2021}, {53, 52});
    l.age_effect = b;
    l.week_effect = k;
    return l;
}

RateTable rates_for(const CovidLayer &l, double scale) {
    const IntRange ages = covered_range(l.ages);
    RateTable r{ages, {2020, 2021}, Eigen::MatrixXd(ages.size(), 2)};
    for (int x = 0; x < ages.size(); ++x) {
        r.mu(x, 0) = scale * std::exp(0.09 * (ages.first + x));
        r.mu(x, 1) = 0.98 * r.mu(x, 0);
    }
    return r;
}

double two_year_gap(const CovidLayer &l, const CovidLayer &a, const RateTable &r, int i) {
    const int age = l.ages[static_cast<std::size_t>(i)].low;
    double weekly = 0.0, annual = 0.0;
    for (int t : {2020, 2021}) {
        const int wt = l.grid.weeks_in(t);
        double m = 0.0;
        for (int w = 1; w <= wt; ++w) m += std::exp(l.age_effect(i) * l.week_effect(l.grid.column(t, w)));
        weekly += r.at(age, t) * m / wt;
        annual += r.at(age, t) * std::exp(a.annual_age_effect(i) * a.annual_year(t));
    }
    return std::abs(weekly - annual);
}

} // namespace

TEST_CASE("annualizing a zero layer is degenerate") {
    const CovidLayer l = weekly_layer(Eigen::VectorXd::Constant(4, 0.5), Eigen::VectorXd::Zero(105), 60);
    const CovidLayer a = annualize(l, nullptr, rates_for(l, 1e-4));
    CHECK(a.annual_degenerate);
    CHECK(a.annual_year_effect.cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::abs(a.annual_age_effect.norm() - 1.0) < 1e-14);
}

TEST_CASE("a constant weekly log multiple annualizes to the same value") {
    Eigen::VectorXd b = Eigen::VectorXd::Constant(4, 0.5);
    const CovidLayer l = weekly_layer(b, Eigen::VectorXd::Constant(105, 0.2), 60);
    const CovidLayer a = annualize(l, nullptr, rates_for(l, 1e-4));
    for (int i = 0; i < 4; ++i)
        for (int t : {2020, 2021}) CHECK(a.annual_age_effect(i) * a.annual_year(t) == doctest::Approx(0.1).epsilon(1e-10));
}

TEST_CASE("annualization reproduces two-year weekly survival") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd b(20), k(105);
        for (auto &v : b) v = 0.3 + 0.1 * z(rng);
        b.normalize();
        for (int c = 0; c < 105; ++c) k(c) = 1.5 * std::exp(-0.5 * std::pow((c - 15.0) / 4.0, 2)) + 0.2 * z(rng);
        const CovidLayer l = weekly_layer(b, k, 70);
        const RateTable r = rates_for(l, 2e-5);
        const CovidLayer a = annualize(l, nullptr, r);
        CHECK(std::abs(a.annual_age_effect.norm() - 1.0) < 1e-12);
        CHECK(a.annual_age_effect.sum() >= 0.0);
        for (int i = 0; i < 20; ++i) CHECK(two_year_gap(l, a, r, i) < 1e-10);
    }
}

TEST_CASE("annualization of a seasonal layer needs its seasonal effect") {
    CovidLayer l = weekly_layer(Eigen::VectorXd::Constant(2, 0.7), Eigen::VectorXd::Constant(105, 0.1), 60);
    l.method = SeasonalMethod::Seasonal;
    CHECK_THROWS_AS(annualize(l, nullptr, rates_for(l, 1e-4)), ConfigError);
}

TEST_CASE("scenario paths") {
    const auto specs = standard_scenarios(0.8, 0.5, 50);
    REQUIRE(specs.size() == 6);
    CHECK(build_scenario(specs[0]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((build_scenario(specs[1]).array() - 0.8).abs().maxCoeff() == 0.0);
    CHECK(scenario_value(specs[2], 2) == 0.25 * 0.8);
    CHECK(std::abs(scenario_value(specs[3], 40) - 1.25 * 0.8) < 1e-9);
    CHECK(scenario_value(specs[4], 1) == doctest::Approx(0.5 * 0.8 + 0.5 * 0.2));
    CHECK(scenario_value(specs[5], 60) == doctest::Approx(-0.2));
    ScenarioSpec bad = specs[0];
    bad.eta = 1.5;
    CHECK_THROWS(build_scenario(bad));
}

TEST_CASE("age effect extension and scenario rates") {
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(56, 0.01, 0.2);
    const Eigen::VectorXd full = extend_age_effect(v, {40, 95}, {0, 120});
    CHECK(full(30) == 0.0);
    CHECK(full(40) == v(0));
    CHECK(full(100) == v(55));
    const Eigen::MatrixXd mu = scenario_mu(Eigen::MatrixXd::Constant(1, 1, 0.01), Eigen::VectorXd::Constant(1, 0.2),
                                           Eigen::VectorXd::Constant(1, 1.5));
    CHECK(mu(0, 0) == doctest::Approx(0.01 * std::exp(0.3)).epsilon(1e-15));
    CHECK(death_probabilities(Eigen::MatrixXd::Constant(1, 1, std::log(2.0)))(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("life expectancy conventions") {
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(11, 20);
    CHECK(life_expectancy(ones, 2000, 3, 2005, LifeTableKind::Period, 10) == 0.5);
    Eigen::MatrixXd half = Eigen::MatrixXd::Constant(11, 20, 0.5);
    // age max_age - 1 with q = 0.5 then certain death: 0.75 + 0.5 * 0.5
    CHECK(life_expectancy(half, 2000, 9, 2000, LifeTableKind::Period, 10) == doctest::Approx(1.0));
    Eigen::MatrixXd flat(11, 20);
    for (int x = 0; x <= 10; ++x) flat.row(x).setConstant(0.05 + 0.08 * x);
    for (int x = 0; x <= 5; ++x)
        CHECK(life_expectancy(flat, 2000, x, 2003, LifeTableKind::Period, 10) ==
              doctest::Approx(life_expectancy(flat, 2000, x, 2003, LifeTableKind::Cohort, 10)).epsilon(1e-15));
    Eigen::MatrixXd improving = flat;
    for (int t = 0; t < 20; ++t) improving.col(t) *= std::pow(0.97, t);
    CHECK(life_expectancy(improving, 2000, 0, 2000, LifeTableKind::Cohort, 10) >
          life_expectancy(improving, 2000, 0, 2000, LifeTableKind::Period, 10));
    CHECK_THROWS_AS(life_expectancy(flat, 2000, 0, 2015, LifeTableKind::Cohort, 10), DataError);
}
