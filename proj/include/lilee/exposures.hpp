#pragma once

#include "lilee/ingest.hpp"
#include "lilee/types.hpp"

#include <array>
#include <vector>

namespace lilee {

/// Simplified calendar used for weekly exposures: February has 28 days and
/// December 30, so a year is exactly 52 weeks.
struct WeeklyConventions {
    static constexpr int weeks_per_year = 52;
    static constexpr int february_days = 28;
    static constexpr int december_days = 30;
    static constexpr int year_days = 364;
    static constexpr double exposure_scale = 7.0 / 365.0;
    static constexpr std::array<int, 12> month_days{31, february_days, 31, 30, 31, 30, 31, 31, 30, 31, 30, december_days};

    /// Day offset (0-based) of the first day of `month` (1..12); 13 gives year_days.
    static int month_start(int month);
};
static_assert(WeeklyConventions::year_days == 52 * 7);

/// Individual-age values over a contiguous age range.
struct AgeVector {
    IntRange ages;
    Eigen::VectorXd values;
};

/// Annual deaths summed over `years` for one country and gender.
AgeVector historical_age_totals(const AnnualPanel &panel, const std::string &country, Gender gender, IntRange years);

/// Splits grouped weekly deaths over individual ages in proportion to the
/// historical age distribution inside each group. Group sums are preserved.
WeeklyDeaths disaggregate_deaths(const WeeklyDeaths &grouped, const AgeVector &historical);

/// Sums individual-age deaths into the given groups (used to build coarser
/// granularity levels from individual data).
WeeklyDeaths aggregate_deaths(const WeeklyDeaths &individual, const std::vector<AgeIndex> &groups);

/// Deaths in each week by the age the deceased would have reached on
/// December 31. Input rows are consecutive individual ages (lowest first);
/// columns are the weeks 1..weeks_in_year of one year. The term for the age
/// below the lowest is zero and the top row is treated as an open age group.
Eigen::MatrixXd cohort_deaths(const Eigen::MatrixXd &deaths, int weeks_in_year);

/// Population at the start of weeks 1..weeks_in_year+1 from the January 1
/// population, with births replacing the lowest age one-for-one and the top
/// age open. Negative results are clamped to zero with a warning.
Eigen::MatrixXd project_population(const Eigen::VectorXd &start, const Eigen::MatrixXd &cohort, int weeks_in_year);

/// Exposure per week from week-start populations (columns 1..w_t+1):
/// average of the two bounding populations times 7/365. Week 53 repeats week 52.
Eigen::MatrixXd weekly_exposures_from_projection(const Eigen::MatrixXd &population, int weeks_in_year);

/// Exposures for every column of `grid` by linear interpolation between
/// first-of-month snapshots of one gender on the simplified calendar.
Eigen::MatrixXd weekly_exposures_monthly_interpolation(const std::vector<PopulationSnapshot> &snapshots,
                                                       const WeekGrid &grid);

/// Exposures for the years of `target`: each year is projected from the
/// latest January 1 snapshot not after it, chaining through the intermediate
/// years. Chaining is allowed but warned about.
Eigen::MatrixXd weekly_exposures_by_projection(const std::vector<PopulationSnapshot> &snapshots,
                                               const WeeklyDeaths &deaths, const WeekGrid &target);

/// Largest relative gap between the projected end-of-year population and the
/// observed next-January snapshot, over ages whose observed population is at
/// least `min_population`.
double backtest_projection(const Eigen::VectorXd &start, const Eigen::MatrixXd &deaths, int weeks_in_year,
                           const Eigen::VectorXd &observed_next, double min_population = 0.0);

} // namespace lilee
