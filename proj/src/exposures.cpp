#include "lilee/exposures.hpp"

#include "lilee/error.hpp"
#include "lilee/log.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>

namespace lilee {

int WeeklyConventions::month_start(int month) {
    if (month < 1 || month > 13) throw DataError(fmt::format("month {} out of range", month));
    int day = 0;
    for (int m = 1; m < month; ++m) day += month_days[m - 1];
    return day;
}

AgeVector historical_age_totals(const AnnualPanel &panel, const std::string &country, Gender gender,
                                IntRange years) {
    if (!panel.years.contains(years))
        throw DataError(fmt::format("historical years {} not inside panel years {}", format_range(years),
                                    format_range(panel.years)));
    const auto &series = panel.at(country, gender);
    AgeVector out{panel.ages, Eigen::VectorXd::Zero(panel.ages.size())};
    out.values = series.deaths.middleCols(panel.years.offset(years.first), years.size()).rowwise().sum();
    return out;
}

WeeklyDeaths disaggregate_deaths(const WeeklyDeaths &grouped, const AgeVector &historical) {
    validate_age_groups(grouped.ages);
    const IntRange range = covered_range(grouped.ages);
    if (!historical.ages.contains(range))
        throw DataError(fmt::format("historical deaths cover ages {} but the groups need {}",
                                    format_range(historical.ages), format_range(range)));

    WeeklyDeaths out;
    out.country = grouped.country;
    out.gender = grouped.gender;
    out.ages = individual_ages(range);
    out.grid = grouped.grid;
    out.deaths = Eigen::MatrixXd::Zero(range.size(), grouped.grid.columns());

    for (std::size_t g = 0; g < grouped.ages.size(); ++g) {
        const AgeIndex group = grouped.ages[g];
        const auto row = grouped.deaths.row(static_cast<Eigen::Index>(g));
        const int first = range.offset(group.low);
        if (group.is_individual()) {
            out.deaths.row(first) = row;
            continue;
        }
        double total = 0.0;
        for (int x = group.low; x <= group.high; ++x) total += historical.values(historical.ages.offset(x));
        if (total <= 0.0) {
            if (row.cwiseAbs().maxCoeff() > 0.0)
                throw DataError(fmt::format("historical deaths for group {} are zero but weekly deaths are not",
                                            format_age(group)));
            continue;
        }
        // The last member takes the remainder so the group sum is reproduced
        // exactly rather than up to rounding of the shares.
        Eigen::RowVectorXd assigned = Eigen::RowVectorXd::Zero(row.size());
        for (int x = group.low; x < group.high; ++x) {
            const double share = historical.values(historical.ages.offset(x)) / total;
            out.deaths.row(range.offset(x)) = row * share;
            assigned += out.deaths.row(range.offset(x));
        }
        out.deaths.row(range.offset(group.high)) = (row - assigned).cwiseMax(0.0);
    }
    return out;
}

WeeklyDeaths aggregate_deaths(const WeeklyDeaths &individual, const std::vector<AgeIndex> &groups) {
    validate_age_groups(groups);
    std::map<int, Eigen::Index> row_of;
    for (std::size_t i = 0; i < individual.ages.size(); ++i) {
        const auto &a = individual.ages[i];
        if (!a.is_individual())
            throw DataError(fmt::format("aggregation needs individual ages, found group {}", format_age(a)));
        row_of[a.low] = static_cast<Eigen::Index>(i);
    }
    WeeklyDeaths out;
    out.country = individual.country;
    out.gender = individual.gender;
    out.ages = groups;
    out.grid = individual.grid;
    out.deaths = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(groups.size()), individual.grid.columns());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (int x = groups[g].low; x <= groups[g].high; ++x) {
            auto it = row_of.find(x);
            if (it == row_of.end())
                throw DataError(fmt::format("age {} of group {} is missing", x, format_age(groups[g])));
            out.deaths.row(static_cast<Eigen::Index>(g)) += individual.deaths.row(it->second);
        }
    }
    return out;
}

Eigen::MatrixXd cohort_deaths(const Eigen::MatrixXd &deaths, int weeks_in_year) {
    if (deaths.cols() != weeks_in_year)
        throw DataError(fmt::format("cohort_deaths: {} columns for a {}-week year", deaths.cols(), weeks_in_year));
    const Eigen::Index n = deaths.rows();
    Eigen::MatrixXd c(n, weeks_in_year);
    for (int w = 1; w <= weeks_in_year; ++w) {
        const double late = static_cast<double>(w) / weeks_in_year;
        const double early = 1.0 - late;
        for (Eigen::Index x = 0; x < n; ++x) {
            const double below = x > 0 ? deaths(x - 1, w - 1) : 0.0;
            c(x, w - 1) = early * below + late * deaths(x, w - 1);
        }
        // Deaths in the open group all stay in it, whichever birthday they missed.
        if (n > 0) c(n - 1, w - 1) += early * deaths(n - 1, w - 1);
    }
    return c;
}

Eigen::MatrixXd project_population(const Eigen::VectorXd &start, const Eigen::MatrixXd &cohort, int weeks_in_year) {
    if (cohort.cols() != weeks_in_year || cohort.rows() != start.size())
        throw DataError(fmt::format("project_population: cohort deaths are {}x{}, expected {}x{}", cohort.rows(),
                                    cohort.cols(), start.size(), weeks_in_year));
    if (start.size() == 0) throw DataError("project_population: empty population");
    if (start.minCoeff() < 0.0) throw DataError("project_population: negative start population");

    const Eigen::Index n = start.size();
    Eigen::MatrixXd p(n, weeks_in_year + 1);
    p.col(0) = start;
    Eigen::VectorXd cumulative = Eigen::VectorXd::Zero(n);
    int clamped = 0;
    for (int w = 1; w <= weeks_in_year; ++w) {
        cumulative += cohort.col(w - 1);
        const double late = static_cast<double>(w) / weeks_in_year;
        const double early = 1.0 - late;
        for (Eigen::Index x = 0; x < n; ++x) {
            double value;
            if (x == n - 1 && n > 1) {
                value = start(x) + late * start(x - 1) - cumulative(x);
            } else {
                const double staying = start(x) - (x + 1 < n ? cumulative(x + 1) : 0.0);
                // Births over the year are taken equal to the lowest age's
                // January population.
                const double below = x > 0 ? start(x - 1) : start(0);
                value = early * staying + late * (below - cumulative(x));
            }
            if (value < 0.0) {
                value = 0.0;
                ++clamped;
            }
            p(x, w) = value;
        }
    }
    if (clamped > 0) log().warn("population projection went negative in {} cells; clamped to zero", clamped);
    return p;
}

Eigen::MatrixXd weekly_exposures_from_projection(const Eigen::MatrixXd &population, int weeks_in_year) {
    if (population.cols() != weeks_in_year + 1)
        throw DataError(fmt::format("expected {} week-start populations, got {}", weeks_in_year + 1, population.cols()));
    const int regular = std::min(weeks_in_year, WeeklyConventions::weeks_per_year);
    Eigen::MatrixXd e(population.rows(), weeks_in_year);
    for (int w = 0; w < regular; ++w)
        e.col(w) = 0.5 * (population.col(w) + population.col(w + 1)) * WeeklyConventions::exposure_scale;
    for (int w = regular; w < weeks_in_year; ++w) e.col(w) = e.col(regular - 1);
    return e;
}

Eigen::MatrixXd weekly_exposures_monthly_interpolation(const std::vector<PopulationSnapshot> &snapshots,
                                                       const WeekGrid &grid) {
    if (snapshots.empty()) throw DataError("no population snapshots");
    const IntRange ages = snapshots.front().ages;
    std::map<std::pair<int, int>, const PopulationSnapshot *> by_month;
    for (const auto &s : snapshots) {
        if (s.gender != snapshots.front().gender)
            throw DataError("monthly interpolation needs snapshots of a single gender");
        if (s.ages != ages) throw DataError("population snapshots cover different age ranges");
        if (s.date.day != 1) throw DataError("monthly snapshots must be dated the first of a month");
        by_month[{s.date.year, s.date.month}] = &s;
    }
    auto snapshot = [&](int year, int month) -> const Eigen::VectorXd & {
        auto it = by_month.find({year, month});
        if (it == by_month.end())
            throw DataError(fmt::format("population snapshot for {:04d}-{:02d}-01 is missing", year, month));
        return it->second->counts;
    };
    // Population on 0-based day `day` of `year` on the simplified calendar;
    // day 364 is January 1 of the next year.
    auto population_on = [&](int year, int day) -> Eigen::VectorXd {
        if (day >= WeeklyConventions::year_days) return snapshot(year + 1, 1);
        int month = 1;
        while (WeeklyConventions::month_start(month + 1) <= day) ++month;
        const int from = WeeklyConventions::month_start(month);
        const int length = WeeklyConventions::month_days[month - 1];
        const Eigen::VectorXd &lo = snapshot(year, month);
        const Eigen::VectorXd &hi = month == 12 ? snapshot(year + 1, 1) : snapshot(year, month + 1);
        const double frac = static_cast<double>(day - from) / length;
        return (1.0 - frac) * lo + frac * hi;
    };

    Eigen::MatrixXd e(ages.size(), grid.columns());
    for (int year : grid.years()) {
        const int wt = grid.weeks_in(year);
        const int regular = std::min(wt, WeeklyConventions::weeks_per_year);
        const int base = grid.year_offset(year);
        for (int w = 1; w <= regular; ++w)
            e.col(base + w - 1) = 0.5 * (population_on(year, 7 * (w - 1)) + population_on(year, 7 * w)) *
                                  WeeklyConventions::exposure_scale;
        for (int w = regular + 1; w <= wt; ++w) e.col(base + w - 1) = e.col(base + regular - 1);
    }
    return e;
}

Eigen::MatrixXd weekly_exposures_by_projection(const std::vector<PopulationSnapshot> &snapshots,
                                               const WeeklyDeaths &deaths, const WeekGrid &target) {
    const IntRange ages = covered_range(deaths.ages);
    for (const auto &a : deaths.ages)
        if (!a.is_individual()) throw DataError("projection needs deaths by individual age");
    std::map<int, const PopulationSnapshot *> by_year;
    for (const auto &s : snapshots) {
        if (s.date.month != 1 || s.date.day != 1) continue;
        if (s.ages != ages)
            throw DataError(fmt::format("deaths cover ages {} but the population covers {}", format_range(ages),
                                        format_range(s.ages)));
        by_year[s.date.year] = &s;
    }
    if (target.years().empty()) throw DataError("no target years");

    Eigen::MatrixXd e(ages.size(), target.columns());
    for (int year : target.years()) {
        auto it = by_year.upper_bound(year);
        if (it == by_year.begin())
            throw DataError(fmt::format("{} {}: no January 1 population on or before {}", deaths.country,
                                        to_code(deaths.gender), year));
        --it;
        const int from = it->first;
        if (from < year)
            log().warn("{} {}: {} exposures chained over {} projected year(s) from the {} snapshot", deaths.country,
                       to_code(deaths.gender), year, year - from, from);
        Eigen::VectorXd p = it->second->counts;
        for (int y = from; y <= year; ++y) {
            if (!deaths.grid.has_year(y))
                throw DataError(fmt::format("weekly deaths for {} are needed to project the population", y));
            const int wt = deaths.grid.weeks_in(y);
            const Eigen::MatrixXd d = deaths.deaths.middleCols(deaths.grid.year_offset(y), wt);
            const Eigen::MatrixXd pop = project_population(p, cohort_deaths(d, wt), wt);
            if (y == year) {
                if (target.weeks_in(y) != wt)
                    throw DataError(fmt::format("year {} has {} weeks of deaths but {} target weeks", y, wt,
                                                target.weeks_in(y)));
                e.middleCols(target.year_offset(y), wt) = weekly_exposures_from_projection(pop, wt);
            }
            p = pop.col(wt);
        }
    }
    return e;
}

double backtest_projection(const Eigen::VectorXd &start, const Eigen::MatrixXd &deaths, int weeks_in_year,
                           const Eigen::VectorXd &observed_next, double min_population) {
    const Eigen::MatrixXd pop = project_population(start, cohort_deaths(deaths, weeks_in_year), weeks_in_year);
    if (observed_next.size() != start.size()) throw DataError("backtest snapshot has a different age range");
    double worst = 0.0;
    for (Eigen::Index x = 0; x < start.size(); ++x) {
        if (observed_next(x) <= 0.0 || observed_next(x) < min_population) continue;
        worst = std::max(worst, std::abs(pop(x, weeks_in_year) - observed_next(x)) / observed_next(x));
    }
    return worst;
}

} // namespace lilee
