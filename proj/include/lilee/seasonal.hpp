#pragma once

#include "lilee/types.hpp"

#include <map>
#include <vector>

namespace lilee {

/// C2 periodic cubic spline through values at strictly increasing knot
/// positions inside one period. Evaluation wraps arguments into the period.
class CyclicCubicSpline {
public:
    CyclicCubicSpline(double period, std::vector<double> positions, Eigen::VectorXd values);

    double operator()(double x) const;
    double derivative(double x) const;
    double second_derivative(double x) const;

    double period() const noexcept { return period_; }
    const std::vector<double> &positions() const noexcept { return positions_; }
    const Eigen::VectorXd &values() const noexcept { return values_; }

    /// Row i holds the weights of every knot value in the spline evaluated at
    /// points[i]; the spline is linear in its knot values.
    static Eigen::MatrixXd basis(double period, const std::vector<double> &positions,
                                 const std::vector<double> &points);

private:
    struct Local {
        int left;
        double h;
        double a; // weight of the left knot, in [0, 1]
    };
    Local locate(double x) const;

    double period_;
    std::vector<double> positions_;
    Eigen::VectorXd values_;
    Eigen::VectorXd moments_; // second derivatives at the knots
};

inline constexpr int kSeasonWeeks = 52;

/// Fraction of each year's deaths falling in each week, scaled by the number
/// of weeks so that 1 means a uniform spread.
struct WeeklyFractions {
    std::vector<int> years;
    std::vector<Eigen::VectorXd> fractions; // one vector of length w_t per year

    /// Across-year average for weeks 1..52.
    Eigen::VectorXd average() const;
};

/// weekly_totals maps year -> deaths of weeks 1..w_t summed over ages.
WeeklyFractions weekly_fractions(const std::map<int, Eigen::VectorXd> &weekly_totals);

struct SplineOptions {
    int knots = 12;
    double knot_offset = 0.0;
};

std::vector<double> knot_positions(int knots, double knot_offset);

/// Least-squares cyclic cubic spline through the year-averaged fractions,
/// renormalised to mean one over weeks 1..52.
SeasonalEffect fit_seasonal_spline(const WeeklyFractions &fractions, const SplineOptions &options,
                                   const std::string &country = {}, Gender gender = Gender::Male);

CyclicCubicSpline seasonal_spline(const SeasonalEffect &effect);

/// Uniform seasonal effect (phi == 1), used by the no-seasonal method.
SeasonalEffect flat_seasonal_effect(const std::string &country, Gender gender);

/// Dense evaluation for plotting: columns (week, phi).
Eigen::MatrixXd seasonal_grid(const SeasonalEffect &effect, int points_per_week);

} // namespace lilee
