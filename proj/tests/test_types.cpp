#include "lilee/error.hpp"
#include "lilee/types.hpp"

#include <doctest.h>

using namespace lilee;

TEST_CASE("ranges parse and format") {
    const IntRange r = parse_range("40:95");
    CHECK(r.first == 40);
    CHECK(r.last == 95);
    CHECK(r.size() == 56);
    CHECK(format_range(r) == "40:95");
    CHECK_THROWS_AS(parse_range("95:40"), ConfigError);
    CHECK_THROWS_AS(parse_range("40"), ConfigError);
}

TEST_CASE("age groups must be ordered and contiguous") {
    const std::vector<AgeIndex> ok{{0, 4}, {5, 9}, {10, 10}};
    CHECK_NOTHROW(validate_age_groups(ok));
    CHECK(covered_range(ok) == IntRange{0, 10});
    const std::vector<AgeIndex> gap{{0, 4}, {6, 9}};
    CHECK_THROWS_AS(validate_age_groups(gap), ValidationError);
    const std::vector<AgeIndex> reversed{{4, 0}};
    CHECK_THROWS_AS(validate_age_groups(reversed), ValidationError);
    CHECK(individual_ages({3, 5}).size() == 3);
    CHECK(format_age(AgeIndex{40, 44}) == "40-44");
}

TEST_CASE("week grid columns enumerate year-major") {
    const WeekGrid grid({2020, 2021}, {53, 52});
    CHECK(grid.columns() == 105);
    CHECK(grid.column(2020, 53) == 52);
    CHECK(grid.column(2021, 1) == 53);
    CHECK(grid.year_at(53) == 2021);
    CHECK(grid.week_at(53) == 1);
    CHECK(grid.year_offset(2021) == 53);
    CHECK_THROWS(WeekGrid({2020}, {51}));
    CHECK_THROWS(WeekGrid({2020, 2022}, {52, 52}));
}

TEST_CASE("annual panel validation rejects deaths without exposure") {
    AnnualPanel p;
    p.countries = {"NLD"};
    p.ages = {0, 1};
    p.years = {2000, 2001};
    for (Gender g : kGenders) p.cells[{"NLD", g}] = {Eigen::MatrixXd::Constant(2, 2, 1.0), Eigen::MatrixXd::Constant(2, 2, 10.0)};
    CHECK_NOTHROW(validate(p));
    p.at("NLD", Gender::Male).exposures(1, 1) = 0.0;
    CHECK_THROWS_AS(validate(p), ValidationError);
    p.at("NLD", Gender::Male).deaths(1, 1) = 0.0;
    CHECK_NOTHROW(validate(p));
}

TEST_CASE("annual panel restriction and aggregation") {
    AnnualPanel p;
    p.countries = {"A", "B"};
    p.ages = {0, 3};
    p.years = {2000, 2004};
    for (const auto &c : p.countries)
        for (Gender g : kGenders) {
            Eigen::MatrixXd d(4, 5), e(4, 5);
            for (int x = 0; x < 4; ++x)
                for (int t = 0; t < 5; ++t) {
                    d(x, t) = x + t + (c == "B" ? 100 : 0);
                    e(x, t) = 1000.0;
                }
            p.cells[{c, g}] = {d, e};
        }
    const AnnualSeries agg = p.aggregate(Gender::Female);
    CHECK(agg.deaths(2, 3) == doctest::Approx(2 * (2 + 3) + 100));
    CHECK(agg.exposures(0, 0) == 2000.0);
    const AnnualPanel r = p.restrict({1, 2}, {2001, 2003});
    CHECK(r.at("A", Gender::Male).deaths.rows() == 2);
    CHECK(r.at("A", Gender::Male).deaths.cols() == 3);
    CHECK(r.at("A", Gender::Male).deaths(0, 0) == 2.0);
}

TEST_CASE("gender codes") {
    CHECK(to_code(Gender::Male) == "m");
    CHECK(gender_from_code("f") == Gender::Female);
    CHECK_THROWS(gender_from_code("x"));
}

TEST_CASE("exit codes by error kind") {
    CHECK(exit_code(ErrorKind::Config) == 2);
    CHECK(exit_code(ErrorKind::Data) == 3);
    CHECK(exit_code(ErrorKind::Parse) == 3);
    CHECK(exit_code(ErrorKind::Validation) == 3);
    CHECK(exit_code(ErrorKind::Io) == 3);
    CHECK(exit_code(ErrorKind::Numerical) == 4);
}
