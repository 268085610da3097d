#include "lilee/baseline.hpp"

#include "lilee/error.hpp"
#include "lilee/log.hpp"
#include "lilee/newton.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

namespace lilee {

namespace {

using detail::Cell;
using detail::cell_log_likelihood;
using detail::newton_step;

void check_cells(const Eigen::MatrixXd &d, const Eigen::MatrixXd &e) {
    if (d.rows() != e.rows() || d.cols() != e.cols())
        throw DataError(fmt::format("deaths are {}x{} but exposures {}x{}", d.rows(), d.cols(), e.rows(), e.cols()));
    for (Eigen::Index i = 0; i < d.rows(); ++i)
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            if (!std::isfinite(d(i, j)) || !std::isfinite(e(i, j)) || d(i, j) < 0.0 || e(i, j) < 0.0)
                throw NumericalError(fmt::format("non-finite log-likelihood: invalid cell ({}, {})", i, j));
            if (e(i, j) == 0.0 && d(i, j) > 0.0)
                throw NumericalError(
                    fmt::format("non-finite log-likelihood: deaths with zero exposure in cell ({}, {})", i, j));
        }
}

Eigen::MatrixXd bilinear_eta(const Eigen::MatrixXd &offset, const Eigen::VectorXd &a, const Eigen::VectorXd &b,
                             const Eigen::VectorXd &k) {
    return offset + a.replicate(1, k.size()) + b * k.transpose();
}

CommonParams zero_like(const CommonParams &p) {
    return {Eigen::VectorXd::Zero(p.A.size()), Eigen::VectorXd::Zero(p.B.size()), Eigen::VectorXd::Zero(p.K.size())};
}

} // namespace

double poisson_log_likelihood(const Eigen::MatrixXd &deaths, const Eigen::MatrixXd &exposures,
                              const Eigen::MatrixXd &log_rate) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < deaths.cols(); ++j)
        for (Eigen::Index i = 0; i < deaths.rows(); ++i)
            total += cell_log_likelihood(deaths(i, j), exposures(i, j), log_rate(i, j));
    return total;
}

BilinearFit fit_bilinear(const Eigen::MatrixXd &deaths, const Eigen::MatrixXd &exposures,
                         const Eigen::MatrixXd &offset, const CalibrationOptions &options) {
    check_cells(deaths, exposures);
    const Eigen::Index nx = deaths.rows();
    const Eigen::Index nt = deaths.cols();
    if (nx == 0 || nt == 0) throw DataError("empty calibration panel");

    BilinearFit fit;
    fit.a.resize(nx);
    for (Eigen::Index x = 0; x < nx; ++x) {
        double d = 0.0, fitted = 0.0;
        for (Eigen::Index t = 0; t < nt; ++t) {
            if (exposures(x, t) <= 0.0) continue;
            d += deaths(x, t);
            fitted += exposures(x, t) * std::exp(offset(x, t));
        }
        if (!(d > 0.0) || !(fitted > 0.0))
            throw NumericalError(fmt::format("non-finite log-likelihood: no deaths or exposure in age row {}", x));
        fit.a(x) = std::log(d / fitted);
    }
    fit.b = Eigen::VectorXd::Constant(nx, 1.0 / std::sqrt(static_cast<double>(nx)));
    fit.k = Eigen::VectorXd::Zero(nt);

    Eigen::MatrixXd eta = bilinear_eta(offset, fit.a, fit.b, fit.k);
    double ll = poisson_log_likelihood(deaths, exposures, eta);
    if (!std::isfinite(ll)) throw NumericalError("non-finite log-likelihood at the starting values");
    std::vector<double> lls{ll};
    fit.trace.push_back({0, ll, 0.0});

    for (int it = 1; it <= options.max_iterations; ++it) {
        double max_change = 0.0;
        for (Eigen::Index x = 0; x < nx; ++x) {
            const double s = newton_step(
                [&](int t) { return Cell{deaths(x, t), exposures(x, t), eta(x, t), 1.0}; }, static_cast<int>(nt));
            fit.a(x) += s;
            eta.row(x).array() += s;
            max_change = std::max(max_change, std::abs(s));
        }
        for (Eigen::Index x = 0; x < nx; ++x) {
            const double s = newton_step(
                [&](int t) { return Cell{deaths(x, t), exposures(x, t), eta(x, t), fit.k(t)}; },
                static_cast<int>(nt));
            fit.b(x) += s;
            eta.row(x) += s * fit.k.transpose();
            max_change = std::max(max_change, std::abs(s));
        }
        for (Eigen::Index t = 0; t < nt; ++t) {
            const double s = newton_step(
                [&](int x) { return Cell{deaths(x, t), exposures(x, t), eta(x, t), fit.b(x)}; },
                static_cast<int>(nx));
            fit.k(t) += s;
            eta.col(t) += s * fit.b;
            max_change = std::max(max_change, std::abs(s));
        }

        // Re-impose sum(k) = 0 and |b| = 1; the fitted rates do not change.
        const double shift = fit.k.mean();
        fit.k.array() -= shift;
        fit.a += shift * fit.b;
        const double norm = fit.b.norm();
        if (norm > 0.0) {
            fit.b /= norm;
            fit.k *= norm;
        }
        eta = bilinear_eta(offset, fit.a, fit.b, fit.k);

        const double next = poisson_log_likelihood(deaths, exposures, eta);
        if (!std::isfinite(next)) throw NumericalError("non-finite log-likelihood during calibration", lls);
        fit.trace.push_back({it, next, max_change});
        lls.push_back(next);
        const double improvement = next - ll;
        ll = next;
        if (improvement <= options.tolerance * std::abs(ll)) {
            fit.converged = true;
            break;
        }
    }
    if (!fit.converged)
        throw NumericalError(fmt::format("no convergence after {} iterations", options.max_iterations), lls);

    // Final level steps so that fitted and observed deaths agree per age.
    for (int pass = 0; pass < 5; ++pass) {
        double worst = 0.0;
        for (Eigen::Index x = 0; x < nx; ++x) {
            const double s = newton_step(
                [&](int t) { return Cell{deaths(x, t), exposures(x, t), eta(x, t), 1.0}; }, static_cast<int>(nt));
            fit.a(x) += s;
            eta.row(x).array() += s;
            worst = std::max(worst, std::abs(s));
        }
        if (worst < 1e-15) break;
    }
    return fit;
}

Eigen::MatrixXd common_log_rate(const CommonParams &common) {
    return common.A.replicate(1, common.K.size()) + common.B * common.K.transpose();
}

Eigen::MatrixXd country_log_rate(const CommonParams &common, const CountryParams &country) {
    return common_log_rate(common) + country.alpha.replicate(1, country.kappa.size()) +
           country.beta * country.kappa.transpose();
}

double common_log_likelihood(const AnnualSeries &series, const CommonParams &params) {
    return poisson_log_likelihood(series.deaths, series.exposures, common_log_rate(params));
}

double country_log_likelihood(const AnnualSeries &series, const CommonParams &common, const CountryParams &params) {
    return poisson_log_likelihood(series.deaths, series.exposures, country_log_rate(common, params));
}

CommonParams common_score(const AnnualSeries &series, const CommonParams &params) {
    const Eigen::MatrixXd eta = common_log_rate(params);
    Eigen::MatrixXd resid = series.deaths - (series.exposures.array() * eta.array().exp()).matrix();
    resid = (series.exposures.array() > 0.0).select(resid, 0.0);
    CommonParams g = zero_like(params);
    g.A = resid.rowwise().sum();
    g.B = resid * params.K;
    g.K = resid.transpose() * params.B;
    return g;
}

CountryParams country_score(const AnnualSeries &series, const CommonParams &common, const CountryParams &params) {
    const Eigen::MatrixXd eta = country_log_rate(common, params);
    Eigen::MatrixXd resid = series.deaths - (series.exposures.array() * eta.array().exp()).matrix();
    resid = (series.exposures.array() > 0.0).select(resid, 0.0);
    CountryParams g;
    g.alpha = resid.rowwise().sum();
    g.beta = resid * params.kappa;
    g.kappa = resid.transpose() * params.beta;
    return g;
}

CommonFit calibrate_common(const AnnualSeries &aggregated, const CalibrationOptions &options) {
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(aggregated.deaths.rows(), aggregated.deaths.cols());
    BilinearFit fit = fit_bilinear(aggregated.deaths, aggregated.exposures, zero, options);
    if (fit.k.size() > 1 && fit.k(fit.k.size() - 1) - fit.k(0) > 0.0) {
        fit.b = -fit.b;
        fit.k = -fit.k;
    }
    return {{fit.a, fit.b, fit.k}, std::move(fit.trace)};
}

CountryFit calibrate_country(const AnnualSeries &series, const CommonParams &common,
                             const CalibrationOptions &options) {
    if (common.A.size() != series.deaths.rows() || common.K.size() != series.deaths.cols())
        throw DataError("country panel does not match the common parameters");
    BilinearFit fit = fit_bilinear(series.deaths, series.exposures, common.B * common.K.transpose(), options);
    // The offset of this stage excludes A, so the level parameter absorbs it.
    fit.a -= common.A;
    if (fit.b.sum() < 0.0) {
        fit.b = -fit.b;
        fit.k = -fit.k;
    }
    return {{fit.a, fit.b, fit.k}, std::move(fit.trace)};
}

TimeSeriesFit fit_time_series(const std::vector<std::string> &names, const Eigen::MatrixXd &series) {
    if (static_cast<Eigen::Index>(names.size()) != series.rows())
        throw DataError(fmt::format("{} series names for {} series", names.size(), series.rows()));
    if (series.cols() < 3) throw DataError(fmt::format("time series fit needs at least 3 points, got {}", series.cols()));
    const Eigen::Index n = series.cols() - 1;
    const Eigen::MatrixXd delta = series.rightCols(n) - series.leftCols(n);

    TimeSeriesFit ts;
    ts.names = names;
    ts.observations = static_cast<int>(n);
    ts.drift = delta.rowwise().mean();
    const Eigen::MatrixXd centred = delta.colwise() - ts.drift;
    ts.covariance = centred * centred.transpose() / static_cast<double>(n);
    ts.covariance = 0.5 * (ts.covariance + ts.covariance.transpose());
    ts.tstat.resize(series.rows());
    for (Eigen::Index i = 0; i < series.rows(); ++i) {
        const double se = std::sqrt(ts.covariance(i, i) / static_cast<double>(n));
        if (se > 0.0)
            ts.tstat(i) = ts.drift(i) / se;
        else
            ts.tstat(i) = ts.drift(i) == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ts.drift(i));
    }
    return ts;
}

BaselineCalibration calibrate_baseline(const AnnualPanel &panel, const CalibrationOptions &options) {
    validate(panel);
    BaselineCalibration out;
    BaselineModel &model = out.model;
    model.ages = panel.ages;
    model.years = panel.years;
    model.countries = panel.countries;

    std::vector<std::string> names;
    std::vector<Eigen::VectorXd> rows;
    for (Gender g : kGenders) {
        CommonFit common = calibrate_common(panel.aggregate(g), options);
        log().info("common {}: {} iterations, lnL {:.6f}", to_code(g), common.trace.size() - 1,
                   common.trace.back().log_likelihood);
        names.push_back(common_series_name(g));
        rows.push_back(common.params.K);
        for (const auto &c : panel.countries) {
            CountryFit country = calibrate_country(panel.at(c, g), common.params, options);
            log().info("{}:{}: {} iterations, lnL {:.6f}", c, to_code(g), country.trace.size() - 1,
                       country.trace.back().log_likelihood);
            names.push_back(country_series_name(c, g));
            rows.push_back(country.params.kappa);
            model.country[{c, g}] = std::move(country.params);
            out.country_trace[{c, g}] = std::move(country.trace);
        }
        model.common[g] = std::move(common.params);
        out.common_trace[g] = std::move(common.trace);
    }
    Eigen::MatrixXd series(static_cast<Eigen::Index>(rows.size()), panel.years.size());
    for (std::size_t i = 0; i < rows.size(); ++i) series.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    model.time_series = fit_time_series(names, series);
    validate(model);
    return out;
}

namespace {

Eigen::VectorXd last_values(const BaselineModel &model) {
    const auto &ts = model.time_series;
    Eigen::VectorXd last(static_cast<Eigen::Index>(ts.names.size()));
    for (Gender g : kGenders) {
        auto it = model.common.find(g);
        if (it == model.common.end()) continue;
        last(ts.index_of(common_series_name(g))) = it->second.K(it->second.K.size() - 1);
        for (const auto &c : model.countries) {
            const auto &p = model.country.at({c, g});
            last(ts.index_of(country_series_name(c, g))) = p.kappa(p.kappa.size() - 1);
        }
    }
    return last;
}

Eigen::VectorXd projection_drifts(const TimeSeriesFit &ts) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(ts.names.size()));
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = ts.projection_drift(static_cast<int>(i));
    return d;
}

} // namespace

PeriodPaths central_paths(const BaselineModel &model, int horizon) {
    if (horizon < 0) throw ConfigError("negative projection horizon");
    const Eigen::VectorXd last = last_values(model);
    const Eigen::VectorXd drift = projection_drifts(model.time_series);
    PeriodPaths p{model.years.last + 1, Eigen::MatrixXd(last.size(), horizon)};
    for (int h = 1; h <= horizon; ++h) p.values.col(h - 1) = last + static_cast<double>(h) * drift;
    return p;
}

PeriodPaths simulate_paths(const BaselineModel &model, int horizon, std::mt19937_64 &rng) {
    if (horizon < 0) throw ConfigError("negative projection horizon");
    const auto &ts = model.time_series;
    const Eigen::VectorXd drift = projection_drifts(ts);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ts.covariance);
    if (ldlt.info() != Eigen::Success) throw NumericalError("covariance factorization failed");
    const Eigen::VectorXd root_d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd lower = ldlt.matrixL();
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::VectorXd state = last_values(model);
    PeriodPaths p{model.years.last + 1, Eigen::MatrixXd(state.size(), horizon)};
    Eigen::VectorXd z(state.size());
    for (int h = 1; h <= horizon; ++h) {
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
        Eigen::VectorXd innovation = lower * root_d.cwiseProduct(z);
        innovation = ldlt.transpositionsP().transpose() * innovation;
        state += drift + innovation;
        p.values.col(h - 1) = state;
    }
    return p;
}

double baseline_mu(const BaselineModel &model, const PeriodPaths &paths, const std::string &country, Gender gender,
                   int age, int year) {
    if (!model.ages.contains(age))
        throw DataError(fmt::format("age {} outside the baseline ages {}", age, format_range(model.ages)));
    if (year < model.years.first) throw DataError(fmt::format("year {} precedes the calibration period", year));
    const auto &common = model.common.at(gender);
    auto it = model.country.find({country, gender});
    if (it == model.country.end()) throw DataError(fmt::format("country {} not in the baseline model", country));
    const auto &local = it->second;
    const int x = model.ages.offset(age);
    double k, kappa;
    if (year <= model.years.last) {
        k = common.K(model.years.offset(year));
        kappa = local.kappa(model.years.offset(year));
    } else {
        const int h = year - paths.first_year;
        if (h < 0 || h >= paths.values.cols())
            throw DataError(fmt::format("year {} beyond the projected period effects", year));
        k = paths.values(model.time_series.index_of(common_series_name(gender)), h);
        kappa = paths.values(model.time_series.index_of(country_series_name(country, gender)), h);
    }
    return std::exp(common.A(x) + common.B(x) * k + local.alpha(x) + local.beta(x) * kappa);
}

double baseline_mu(const BaselineModel &model, const std::string &country, Gender gender, int age, int year) {
    const int horizon = std::max(0, year - model.years.last);
    return baseline_mu(model, central_paths(model, horizon), country, gender, age, year);
}

Eigen::MatrixXd baseline_mu_table(const BaselineModel &model, const std::string &country, Gender gender,
                                  IntRange years) {
    const PeriodPaths paths = central_paths(model, std::max(0, years.last - model.years.last));
    Eigen::MatrixXd mu(model.ages.size(), years.size());
    for (int t = years.first; t <= years.last; ++t)
        for (int x = model.ages.first; x <= model.ages.last; ++x)
            mu(model.ages.offset(x), years.offset(t)) = baseline_mu(model, paths, country, gender, x, t);
    return mu;
}

} // namespace lilee

namespace lilee {

double RateTable::at(int age, int year) const {
    if (!ages.contains(age) || !years.contains(year))
        throw DataError(fmt::format("no rate for age {} in {} (table covers ages {} and years {})", age, year,
                                    format_range(ages), format_range(years)));
    return mu(ages.offset(age), years.offset(year));
}

RateTable extend_rates(const RateTable &table, int max_age, IntRange fit_ages) {
    if (max_age <= table.ages.last) return table;
    if (!table.ages.contains(fit_ages) || fit_ages.size() < 2)
        throw DataError(fmt::format("extrapolation ages {} not inside the table ages {}", format_range(fit_ages),
                                    format_range(table.ages)));
    RateTable out{{table.ages.first, max_age}, table.years, Eigen::MatrixXd(max_age - table.ages.first + 1,
                                                                              table.years.size())};
    out.mu.topRows(table.ages.size()) = table.mu;
    Eigen::MatrixXd design(fit_ages.size(), 2);
    for (int x = fit_ages.first; x <= fit_ages.last; ++x) design.row(fit_ages.offset(x)) << 1.0, static_cast<double>(x);
    const auto qr = design.colPivHouseholderQr();
    for (Eigen::Index t = 0; t < table.mu.cols(); ++t) {
        const Eigen::VectorXd y =
            table.mu.col(t).segment(table.ages.offset(fit_ages.first), fit_ages.size()).array().log().matrix();
        const Eigen::Vector2d coef = qr.solve(y);
        for (int x = table.ages.last + 1; x <= max_age; ++x)
            out.mu(out.ages.offset(x), t) = std::exp(coef(0) + coef(1) * x);
    }
    return out;
}

RateTable pre_covid_rates(const BaselineModel &model, const std::string &country, Gender gender, IntRange years,
                          int max_age, IntRange fit_ages) {
    RateTable table{model.ages, years, baseline_mu_table(model, country, gender, years)};
    return extend_rates(table, max_age, fit_ages);
}

} // namespace lilee
