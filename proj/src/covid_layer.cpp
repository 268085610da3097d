#include "lilee/covid_layer.hpp"

#include "lilee/error.hpp"
#include "lilee/log.hpp"
#include "lilee/newton.hpp"

#include <fmt/format.h>

#include <cmath>

namespace lilee {

using detail::Cell;
using detail::newton_step;

Eigen::MatrixXd panel_rates(const WeeklyPanel &panel, const RateTable &rates, const RateTable *weights) {
    const auto &years = panel.grid.years();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(panel.ages.size()), static_cast<Eigen::Index>(years.size()));
    for (std::size_t i = 0; i < panel.ages.size(); ++i) {
        const AgeIndex age = panel.ages[i];
        for (std::size_t j = 0; j < years.size(); ++j) {
            const int t = years[j];
            double value;
            if (age.is_individual()) {
                value = rates.at(age.low, t);
            } else {
                if (weights == nullptr)
                    throw DataError(fmt::format("rates for group {} need exposure weights by individual age",
                                                format_age(age)));
                double num = 0.0, den = 0.0;
                for (int x = age.low; x <= age.high; ++x) {
                    const double w = weights->at(x, t);
                    num += w * rates.at(x, t);
                    den += w;
                }
                if (!(den > 0.0)) throw DataError(fmt::format("group {} has no exposure in {}", format_age(age), t));
                value = num / den;
            }
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
        }
    }
    return out;
}

Eigen::MatrixXd predicted_deaths(const WeeklyPanel &panel, const Eigen::MatrixXd &row_rates,
                                 const SeasonalEffect *phi, SeasonalMethod method) {
    if (method == SeasonalMethod::Seasonal && phi == nullptr)
        throw ConfigError("the seasonal method needs a fitted seasonal effect");
    const auto &years = panel.grid.years();
    if (row_rates.rows() != panel.exposures.rows() || row_rates.cols() != static_cast<Eigen::Index>(years.size()))
        throw DataError("rates do not match the weekly panel");
    Eigen::MatrixXd out(panel.exposures.rows(), panel.exposures.cols());
    for (std::size_t j = 0; j < years.size(); ++j) {
        const int t = years[j];
        const int base = panel.grid.year_offset(t);
        for (int w = 1; w <= panel.grid.weeks_in(t); ++w) {
            const double factor = method == SeasonalMethod::Seasonal ? phi->at_week(w) : 1.0;
            out.col(base + w - 1) =
                panel.exposures.col(base + w - 1).cwiseProduct(row_rates.col(static_cast<Eigen::Index>(j))) * factor;
        }
    }
    return out;
}

double covid_log_likelihood(const Eigen::MatrixXd &deaths, const Eigen::MatrixXd &predicted,
                            const Eigen::VectorXd &age_effect, const Eigen::VectorXd &week_effect) {
    return poisson_log_likelihood(deaths, predicted, age_effect * week_effect.transpose());
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> covid_score(const Eigen::MatrixXd &deaths, const Eigen::MatrixXd &predicted,
                                                        const Eigen::VectorXd &age_effect,
                                                        const Eigen::VectorXd &week_effect) {
    const Eigen::MatrixXd eta = age_effect * week_effect.transpose();
    Eigen::MatrixXd resid = deaths - (predicted.array() * eta.array().exp()).matrix();
    resid = (predicted.array() > 0.0).select(resid, 0.0);
    return {resid * week_effect, resid.transpose() * age_effect};
}

CovidFit calibrate_covid(const Eigen::MatrixXd &deaths, const Eigen::MatrixXd &predicted,
                         const CalibrationOptions &options) {
    if (deaths.rows() != predicted.rows() || deaths.cols() != predicted.cols())
        throw DataError("observed and predicted deaths differ in shape");
    const Eigen::Index nx = deaths.rows();
    const Eigen::Index nc = deaths.cols();
    if (nx == 0 || nc == 0) throw DataError("empty COVID calibration panel");
    for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < nc; ++j) {
            if (!std::isfinite(deaths(i, j)) || deaths(i, j) < 0.0)
                throw DataError(fmt::format("invalid observed deaths in cell ({}, {})", i, j));
            if (!std::isfinite(predicted(i, j)) || !(predicted(i, j) > 0.0))
                throw DataError(fmt::format("predicted deaths must be positive, cell ({}, {})", i, j));
        }
    if (deaths.sum() <= 0.0) throw DataError("degenerate input: all observed deaths are zero");

    CovidFit fit;
    fit.age_effect = Eigen::VectorXd::Constant(nx, 1.0 / std::sqrt(static_cast<double>(nx)));
    fit.week_effect = Eigen::VectorXd::Zero(nc);
    Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(nx, nc);
    double ll = poisson_log_likelihood(deaths, predicted, eta);
    std::vector<double> lls{ll};
    fit.trace.push_back({0, ll, 0.0});

    bool converged = false;
    for (int it = 1; it <= options.max_iterations; ++it) {
        double max_change = 0.0;
        for (Eigen::Index c = 0; c < nc; ++c) {
            const double s = newton_step(
                [&](int x) { return Cell{deaths(x, c), predicted(x, c), eta(x, c), fit.age_effect(x)}; },
                static_cast<int>(nx));
            fit.week_effect(c) += s;
            eta.col(c) += s * fit.age_effect;
            max_change = std::max(max_change, std::abs(s));
        }
        for (Eigen::Index x = 0; x < nx; ++x) {
            const double s = newton_step(
                [&](int c) { return Cell{deaths(x, c), predicted(x, c), eta(x, c), fit.week_effect(c)}; },
                static_cast<int>(nc));
            fit.age_effect(x) += s;
            eta.row(x) += s * fit.week_effect.transpose();
            max_change = std::max(max_change, std::abs(s));
        }
        const double norm = fit.age_effect.norm();
        if (!(norm > 0.0)) throw NumericalError("age effect collapsed to zero", lls);
        fit.age_effect /= norm;
        fit.week_effect *= norm;
        eta = fit.age_effect * fit.week_effect.transpose();

        const double next = poisson_log_likelihood(deaths, predicted, eta);
        if (!std::isfinite(next)) throw NumericalError("non-finite log-likelihood in the COVID layer", lls);
        fit.trace.push_back({it, next, max_change});
        lls.push_back(next);
        const double improvement = next - ll;
        ll = next;
        if (improvement <= options.tolerance * std::abs(ll)) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw NumericalError(fmt::format("COVID layer: no convergence after {} iterations", options.max_iterations),
                             lls);
    if (fit.age_effect.sum() < 0.0) {
        fit.age_effect = -fit.age_effect;
        fit.week_effect = -fit.week_effect;
    }
    return fit;
}

CovidLayer fit_covid_layer(const WeeklyPanel &panel, const RateTable &rates, const SeasonalEffect *phi,
                           const CovidOptions &options, const RateTable *weights) {
    const WeeklyPanel sub = panel.restrict_ages(options.ages);
    const Eigen::MatrixXd predicted =
        predicted_deaths(sub, panel_rates(sub, rates, weights), phi, options.method);
    CovidFit fit = calibrate_covid(sub.deaths, predicted, options.calibration);
    log().info("COVID layer {}:{} method {}: {} iterations", panel.country, to_code(panel.gender),
               static_cast<int>(options.method), fit.trace.size() - 1);

    CovidLayer layer;
    layer.country = panel.country;
    layer.gender = panel.gender;
    layer.method = options.method;
    layer.ages = sub.ages;
    layer.grid = sub.grid;
    layer.age_effect = std::move(fit.age_effect);
    layer.week_effect = std::move(fit.week_effect);
    validate(layer);
    return layer;
}

std::vector<AgeIndex> granularity_groups(int level, IntRange ages) {
    std::vector<AgeIndex> raw;
    switch (level) {
    case 1:
        return individual_ages(ages);
    case 2:
        for (int low = 0; low < 95; low += 5) raw.push_back({low, low + 4});
        raw.push_back({95, std::max(95, ages.last)});
        break;
    case 3:
        raw = {{0, 14}, {15, 64}, {65, 74}, {75, 84}, {85, std::max(85, ages.last)}};
        break;
    default:
        throw ConfigError(fmt::format("granularity level must be 1, 2 or 3, got {}", level));
    }
    std::vector<AgeIndex> out;
    for (AgeIndex g : raw) {
        const int low = std::max(g.low, ages.first);
        const int high = std::min(g.high, ages.last);
        if (low <= high) out.push_back({low, high});
    }
    return out;
}

WeeklyPanel granularity_panel(int level, const WeeklyPanel &individual, const AgeVector &historical) {
    // An open top group may follow the individual ages; it is left out.
    std::size_t n = individual.ages.size();
    if (n > 0 && !individual.ages.back().is_individual()) --n;
    for (std::size_t i = 0; i < n; ++i)
        if (!individual.ages[i].is_individual())
            throw DataError(fmt::format("granularity level {} requires individual-age data, found group {}", level,
                                        format_age(individual.ages[i])));
    if (n == 0) throw DataError("granularity study needs individual-age data");
    const IntRange range{individual.ages.front().low, individual.ages[n - 1].low};
    WeeklyPanel base = individual.restrict_ages(range);
    if (level == 1) return base;

    WeeklyDeaths deaths{base.country, base.gender, base.ages, base.grid, base.deaths};
    const WeeklyDeaths grouped = aggregate_deaths(deaths, granularity_groups(level, range));
    const WeeklyDeaths spread = disaggregate_deaths(grouped, historical);
    base.deaths = spread.deaths;
    return base;
}

std::map<int, CovidLayer> run_granularity_study(const std::vector<int> &levels, const WeeklyPanel &individual,
                                                const AgeVector &historical, const RateTable &rates,
                                                const SeasonalEffect *phi, const CovidOptions &options) {
    std::map<int, CovidLayer> out;
    for (int level : levels)
        out[level] = fit_covid_layer(granularity_panel(level, individual, historical), rates, phi, options);
    return out;
}

} // namespace lilee
