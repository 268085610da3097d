#pragma once

#include <Eigen/Dense>

#include <array>
#include <compare>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lilee {

enum class Gender { Male, Female };

inline constexpr std::array<Gender, 2> kGenders{Gender::Male, Gender::Female};

std::string_view to_code(Gender gender) noexcept;
Gender gender_from_code(std::string_view code);

/// Closed integer interval [first, last].
struct IntRange {
    int first = 0;
    int last = -1;

    int size() const noexcept { return last >= first ? last - first + 1 : 0; }
    bool contains(int v) const noexcept { return v >= first && v <= last; }
    bool contains(const IntRange &other) const noexcept {
        return other.first >= first && other.last <= last;
    }
    int offset(int v) const noexcept { return v - first; }

    auto operator<=>(const IntRange &) const = default;
};

/// Parses "LO:HI".
IntRange parse_range(std::string_view text);
std::string format_range(const IntRange &range);

/// An individual age (low == high) or a contiguous group of ages.
struct AgeIndex {
    int low = 0;
    int high = 0;

    static AgeIndex individual(int age) { return {age, age}; }
    bool is_individual() const noexcept { return low == high; }
    int size() const noexcept { return high - low + 1; }
    bool contains(int age) const noexcept { return age >= low && age <= high; }

    auto operator<=>(const AgeIndex &) const = default;
};

std::string format_age(const AgeIndex &age);

/// Throws ValidationError unless the groups are ordered, disjoint and contiguous.
void validate_age_groups(std::span<const AgeIndex> ages);
std::vector<AgeIndex> individual_ages(IntRange ages);
IntRange covered_range(std::span<const AgeIndex> ages);

struct PopulationKey {
    std::string country;
    Gender gender = Gender::Male;

    auto operator<=>(const PopulationKey &) const = default;
};

std::string format_key(const PopulationKey &key);

/// Deaths and exposures for one (country, gender); rows are ages, columns years.
struct AnnualSeries {
    Eigen::MatrixXd deaths;
    Eigen::MatrixXd exposures;
};

struct AnnualPanel {
    std::vector<std::string> countries;
    IntRange years;
    IntRange ages;
    std::map<PopulationKey, AnnualSeries> cells;

    const AnnualSeries &at(const std::string &country, Gender gender) const;
    AnnualSeries &at(const std::string &country, Gender gender);

    /// Deaths and exposures summed over countries.
    AnnualSeries aggregate(Gender gender) const;
    /// Sub-panel restricted to the given ages and years.
    AnnualPanel restrict(IntRange ages, IntRange years) const;
};

/// Appends another country's data; ranges must agree.
void merge_into(AnnualPanel &target, const AnnualPanel &source);

/// Year/week column layout shared by all weekly data. Column c enumerates
/// (year, week) pairs year-major, weeks 1..weeks_in(year).
class WeekGrid {
public:
    WeekGrid() = default;
    WeekGrid(std::vector<int> years, std::vector<int> weeks_per_year);

    const std::vector<int> &years() const noexcept { return years_; }
    const std::vector<int> &weeks_per_year() const noexcept { return weeks_; }
    int columns() const noexcept { return columns_; }
    int weeks_in(int year) const;
    bool has_year(int year) const noexcept;
    int column(int year, int week) const;
    /// First column of the given year.
    int year_offset(int year) const;
    int year_at(int column) const;
    int week_at(int column) const;

    bool operator==(const WeekGrid &other) const {
        return years_ == other.years_ && weeks_ == other.weeks_;
    }

private:
    std::vector<int> years_;
    std::vector<int> weeks_;
    std::vector<int> offsets_;
    int columns_ = 0;
};

/// Weekly deaths by age or age group; rows follow `ages`, columns follow `grid`.
struct WeeklyDeaths {
    std::string country;
    Gender gender = Gender::Male;
    std::vector<AgeIndex> ages;
    WeekGrid grid;
    Eigen::MatrixXd deaths;
};

struct WeeklyPanel {
    std::string country;
    Gender gender = Gender::Male;
    std::vector<AgeIndex> ages;
    WeekGrid grid;
    Eigen::MatrixXd deaths;
    Eigen::MatrixXd exposures;

    /// Rows for the given contiguous individual ages.
    WeeklyPanel restrict_ages(IntRange ages) const;
};

struct CommonParams {
    Eigen::VectorXd A;
    Eigen::VectorXd B;
    Eigen::VectorXd K;
};

struct CountryParams {
    Eigen::VectorXd alpha;
    Eigen::VectorXd beta;
    Eigen::VectorXd kappa;
};

/// Joint random walk with drift for all period effects. Series are ordered
/// gender-major: K^g followed by kappa^{c,g} for each country.
struct TimeSeriesFit {
    std::vector<std::string> names;
    Eigen::VectorXd drift;
    Eigen::VectorXd tstat;
    Eigen::MatrixXd covariance;
    int observations = 0;
    /// Country drifts are replaced by zero when projecting.
    bool zero_country_drift = true;

    int index_of(const std::string &name) const;
    /// Drift actually used for projection of the named series.
    double projection_drift(int index) const;
};

std::string common_series_name(Gender gender);
std::string country_series_name(const std::string &country, Gender gender);

struct BaselineModel {
    IntRange ages;
    IntRange years;
    std::vector<std::string> countries;
    std::map<Gender, CommonParams> common;
    std::map<PopulationKey, CountryParams> country;
    TimeSeriesFit time_series;
};

/// Multiplicative weekly seasonal factor, mean one over weeks 1..52.
/// The curve is a cyclic cubic spline with period 52 through `knot_values`
/// placed at 1 + knot_offset + j * 52 / knots.
struct SeasonalEffect {
    std::string country;
    Gender gender = Gender::Male;
    int knots = 12;
    double knot_offset = 0.0;
    Eigen::VectorXd knot_values;
    /// phi[w - 1] for w = 1..53; week 53 repeats week 52.
    Eigen::VectorXd phi;

    double at_week(int week) const { return phi(week - 1); }
};

enum class SeasonalMethod {
    NoSeasonal = 1, // seasonality absorbed by the week effect
    Seasonal = 2,   // week effect net of the fitted seasonal curve
};

struct CovidLayer {
    std::string country;
    Gender gender = Gender::Male;
    SeasonalMethod method = SeasonalMethod::Seasonal;
    std::vector<AgeIndex> ages;
    WeekGrid grid;
    Eigen::VectorXd age_effect;
    Eigen::VectorXd week_effect;

    bool annualized = false;
    bool annual_degenerate = false;
    IntRange annual_ages;
    std::vector<int> annual_years;
    Eigen::VectorXd annual_age_effect;
    Eigen::VectorXd annual_year_effect;

    double annual_year(int year) const;
};

struct CodaFit {
    int year = 0;
    Gender gender = Gender::Male;
    IntRange ages;
    Eigen::VectorXd alpha;
    Eigen::VectorXd beta;
    Eigen::VectorXd kappa;
    double explained_variance = 0.0;
    bool degenerate = false;
};

struct ScenarioSpec {
    std::string name;
    double x_start = 0.0;
    double x_infinity = 0.0;
    double eta = 0.5;
    int horizon = 50;
};

/// One scenario's projection: rows are ages, columns forecast years.
struct ScenarioForecast {
    std::string scenario;
    IntRange ages;
    IntRange years;
    int max_age = 120;
    Eigen::VectorXd period_effect; // X_t per forecast year
    Eigen::MatrixXd mu;
    Eigen::MatrixXd q;
    Eigen::MatrixXd e_period;
    Eigen::MatrixXd e_cohort;
};

struct ForecastSet {
    std::string country;
    Gender gender = Gender::Male;
    std::vector<ScenarioForecast> scenarios;
};

// Validation passes. Each throws ValidationError naming the broken invariant.
void validate(const AnnualPanel &panel);
void validate(const WeeklyPanel &panel);
void validate(const BaselineModel &model);
void validate(const SeasonalEffect &effect);
void validate(const CovidLayer &layer);
void validate(const CodaFit &fit);
void validate(const ScenarioSpec &spec);
void validate(const ScenarioForecast &forecast);

} // namespace lilee
