#include "lilee/seasonal.hpp"

#include "lilee/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace lilee {

CyclicCubicSpline::CyclicCubicSpline(double period, std::vector<double> positions, Eigen::VectorXd values)
    : period_(period), positions_(std::move(positions)), values_(std::move(values)) {
    const auto k = static_cast<int>(positions_.size());
    if (k < 3 || values_.size() != k) {
        throw DataError("cyclic spline needs at least 3 knots and one value per knot");
    }
    for (int j = 1; j < k; ++j) {
        if (!(positions_[j] > positions_[j - 1])) {
            throw DataError("cyclic spline knots must be strictly increasing");
        }
    }
    if (!(positions_.back() - positions_.front() < period_)) {
        throw DataError("cyclic spline knots must lie within one period");
    }

    auto spacing = [&](int j) {
        const int jj = (j % k + k) % k;
        return jj == k - 1 ? positions_[0] + period_ - positions_[k - 1] : positions_[jj + 1] - positions_[jj];
    };
    auto value = [&](int j) { return values_((j % k + k) % k); };

    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd rhs(k);
    for (int j = 0; j < k; ++j) {
        const double h_prev = spacing(j - 1);
        const double h = spacing(j);
        system(j, (j - 1 + k) % k) += h_prev / 6.0;
        system(j, j) += (h_prev + h) / 3.0;
        system(j, (j + 1) % k) += h / 6.0;
        rhs(j) = (value(j + 1) - value(j)) / h - (value(j) - value(j - 1)) / h_prev;
    }
    moments_ = system.partialPivLu().solve(rhs);
}

CyclicCubicSpline::Local CyclicCubicSpline::locate(double x) const {
    const double origin = positions_.front();
    double u = std::fmod(x - origin, period_);
    if (u < 0.0) {
        u += period_;
    }
    u += origin;
    auto it = std::upper_bound(positions_.begin(), positions_.end(), u);
    const int left = static_cast<int>(it - positions_.begin()) - 1;
    const int k = static_cast<int>(positions_.size());
    const double right_pos = left == k - 1 ? origin + period_ : positions_[left + 1];
    const double h = right_pos - positions_[left];
    return {left, h, (right_pos - u) / h};
}

double CyclicCubicSpline::operator()(double x) const {
    const auto [j, h, a] = locate(x);
    const int j1 = (j + 1) % static_cast<int>(positions_.size());
    const double b = 1.0 - a;
    return a * values_(j) + b * values_(j1) + ((a * a * a - a) * moments_(j) + (b * b * b - b) * moments_(j1)) * h * h / 6.0;
}

double CyclicCubicSpline::derivative(double x) const {
    const auto [j, h, a] = locate(x);
    const int j1 = (j + 1) % static_cast<int>(positions_.size());
    const double b = 1.0 - a;
    return (values_(j1) - values_(j)) / h - (3.0 * a * a - 1.0) / 6.0 * h * moments_(j) +
           (3.0 * b * b - 1.0) / 6.0 * h * moments_(j1);
}

double CyclicCubicSpline::second_derivative(double x) const {
    const auto [j, h, a] = locate(x);
    const int j1 = (j + 1) % static_cast<int>(positions_.size());
    return a * moments_(j) + (1.0 - a) * moments_(j1);
}

Eigen::MatrixXd CyclicCubicSpline::basis(double period, const std::vector<double> &positions,
                                         const std::vector<double> &points) {
    const auto k = static_cast<Eigen::Index>(positions.size());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const CyclicCubicSpline cardinal(period, positions, Eigen::VectorXd::Unit(k, j));
        for (std::size_t i = 0; i < points.size(); ++i) {
            out(static_cast<Eigen::Index>(i), j) = cardinal(points[i]);
        }
    }
    return out;
}

Eigen::VectorXd WeeklyFractions::average() const {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(kSeasonWeeks);
    for (const auto &f : fractions) {
        mean += f.head(kSeasonWeeks);
    }
    return mean / static_cast<double>(fractions.size());
}

WeeklyFractions weekly_fractions(const std::map<int, Eigen::VectorXd> &weekly_totals) {
    WeeklyFractions out;
    for (const auto &[year, totals] : weekly_totals) {
        if (totals.size() != 52 && totals.size() != 53) {
            throw DataError(fmt::format("year {} has {} weeks, expected 52 or 53", year, totals.size()));
        }
        const double total = totals.sum();
        if (!(total > 0.0)) {
            throw DataError(fmt::format("year {} has zero total deaths", year));
        }
        out.years.push_back(year);
        out.fractions.push_back(totals / total * static_cast<double>(totals.size()));
    }
    if (out.years.empty()) {
        throw DataError("no weekly totals given for the seasonal fit");
    }
    return out;
}

std::vector<double> knot_positions(int knots, double knot_offset) {
    std::vector<double> positions;
    for (int j = 0; j < knots; ++j) {
        double p = std::fmod(knot_offset + kSeasonWeeks * static_cast<double>(j) / knots, kSeasonWeeks);
        if (p < 0.0) {
            p += kSeasonWeeks;
        }
        positions.push_back(1.0 + p);
    }
    std::sort(positions.begin(), positions.end());
    return positions;
}

CyclicCubicSpline seasonal_spline(const SeasonalEffect &effect) {
    return CyclicCubicSpline(kSeasonWeeks, knot_positions(effect.knots, effect.knot_offset), effect.knot_values);
}

SeasonalEffect fit_seasonal_spline(const WeeklyFractions &fractions, const SplineOptions &options,
                                   const std::string &country, Gender gender) {
    if (options.knots < 4) {
        throw ConfigError(fmt::format("seasonal spline needs at least 4 knots, got {}", options.knots));
    }
    if (options.knots > kSeasonWeeks) {
        throw ConfigError(fmt::format("seasonal spline allows at most {} knots", kSeasonWeeks));
    }
    const auto positions = knot_positions(options.knots, options.knot_offset);
    std::vector<double> weeks;
    for (int w = 1; w <= kSeasonWeeks; ++w) {
        weeks.push_back(w);
    }
    const Eigen::MatrixXd design = CyclicCubicSpline::basis(kSeasonWeeks, positions, weeks);
    const Eigen::VectorXd target = fractions.average();
    Eigen::VectorXd coef = design.colPivHouseholderQr().solve(target);
    const double mean = (design * coef).mean();
    if (!(mean > 0.0)) {
        throw NumericalError("seasonal spline has nonpositive mean");
    }
    coef /= mean;

    SeasonalEffect effect;
    effect.country = country;
    effect.gender = gender;
    effect.knots = options.knots;
    effect.knot_offset = options.knot_offset;
    effect.knot_values = coef;
    effect.phi.resize(53);
    const CyclicCubicSpline spline(kSeasonWeeks, positions, coef);
    for (int w = 1; w <= kSeasonWeeks; ++w) {
        effect.phi(w - 1) = spline(w);
    }
    effect.phi(52) = effect.phi(51);

    // Fail rather than truncate: phi multiplies a force of mortality.
    constexpr int kGrid = 20;
    for (int i = 0; i < kSeasonWeeks * kGrid; ++i) {
        const double w = 1.0 + static_cast<double>(i) / kGrid;
        if (!(spline(w) > 0.0)) {
            throw NumericalError(fmt::format("fitted seasonal curve is nonpositive at week {:.2f}", w));
        }
    }
    return effect;
}

SeasonalEffect flat_seasonal_effect(const std::string &country, Gender gender) {
    SeasonalEffect effect;
    effect.country = country;
    effect.gender = gender;
    effect.knots = 12;
    effect.knot_values = Eigen::VectorXd::Ones(12);
    effect.phi = Eigen::VectorXd::Ones(53);
    return effect;
}

Eigen::MatrixXd seasonal_grid(const SeasonalEffect &effect, int points_per_week) {
    const auto spline = seasonal_spline(effect);
    const int n = kSeasonWeeks * points_per_week + 1;
    Eigen::MatrixXd grid(n, 2);
    for (int i = 0; i < n; ++i) {
        const double w = 1.0 + static_cast<double>(i) / points_per_week;
        grid(i, 0) = w;
        grid(i, 1) = spline(w);
    }
    return grid;
}

} // namespace lilee
