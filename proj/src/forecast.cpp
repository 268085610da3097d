#include "lilee/forecast.hpp"

#include "lilee/error.hpp"
#include "lilee/log.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace lilee {

namespace {

constexpr double kBracket = 10.0;
constexpr double kRootTolerance = 1e-12;

double annual_gap(const Eigen::VectorXd &mu, const Eigen::VectorXd &period, const Eigen::VectorXd &mean_factor,
                  double v) {
    double g = 0.0;
    for (Eigen::Index t = 0; t < mu.size(); ++t) g += mu(t) * (std::exp(v * period(t)) - mean_factor(t));
    return g;
}

double annual_gap_slope(const Eigen::VectorXd &mu, const Eigen::VectorXd &period, double v) {
    double g = 0.0;
    for (Eigen::Index t = 0; t < mu.size(); ++t) g += mu(t) * period(t) * std::exp(v * period(t));
    return g;
}

// Root of a function with f(lo) and f(hi) of opposite sign (or zero).
template <typename F>
double bisect(const F &f, double lo, double hi) {
    double flo = f(lo);
    if (flo == 0.0) return lo;
    if (f(hi) == 0.0) return hi;
    while (hi - lo > kRootTolerance) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

Eigen::MatrixXd weekly_mean_factors(const CovidLayer &layer, const SeasonalEffect *phi) {
    const auto &years = layer.grid.years();
    const Eigen::Index nx = layer.age_effect.size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nx, static_cast<Eigen::Index>(years.size()));
    for (std::size_t j = 0; j < years.size(); ++j) {
        const int t = years[j];
        const int wt = layer.grid.weeks_in(t);
        if (wt != 52 && wt != 53) throw DataError(fmt::format("year {} has {} weeks", t, wt));
        const int base = layer.grid.year_offset(t);
        for (int w = 1; w <= wt; ++w) {
            const double f = phi ? phi->at_week(w) : 1.0;
            m.col(static_cast<Eigen::Index>(j)) +=
                (f * (layer.age_effect * layer.week_effect(base + w - 1)).array().exp()).matrix();
        }
        m.col(static_cast<Eigen::Index>(j)) /= wt;
    }
    return m;
}

double solve_annual_age_effect(const Eigen::VectorXd &mu, const Eigen::VectorXd &period,
                               const Eigen::VectorXd &mean_factor) {
    auto g = [&](double v) { return annual_gap(mu, period, mean_factor, v); };
    const double glo = g(-kBracket);
    const double ghi = g(kBracket);
    double root;
    if ((glo <= 0.0) != (ghi <= 0.0) || glo == 0.0 || ghi == 0.0) {
        root = bisect(g, -kBracket, kBracket);
    } else {
        // g is convex in v: look for a negative minimum and take the root of
        // smallest magnitude on either side of it.
        auto slope = [&](double v) { return annual_gap_slope(mu, period, v); };
        double vmin;
        if (slope(-kBracket) >= 0.0)
            vmin = -kBracket;
        else if (slope(kBracket) <= 0.0)
            vmin = kBracket;
        else
            vmin = bisect(slope, -kBracket, kBracket);
        if (g(vmin) > 0.0 || glo < 0.0)
            throw NumericalError(fmt::format("annual age effect: no sign change in [-{0}, {0}]", kBracket));
        const double left = bisect(g, -kBracket, vmin);
        const double right = bisect(g, vmin, kBracket);
        root = std::abs(left) <= std::abs(right) ? left : right;
    }
    // Newton polish; kept only while it reduces the residual.
    for (int i = 0; i < 5; ++i) {
        const double d = annual_gap_slope(mu, period, root);
        if (d == 0.0) break;
        const double next = root - g(root) / d;
        if (!(std::abs(g(next)) < std::abs(g(root)))) break;
        root = next;
    }
    return root;
}

CovidLayer annualize(const CovidLayer &layer, const SeasonalEffect *phi, const RateTable &rates) {
    for (const auto &a : layer.ages)
        if (!a.is_individual())
            throw DataError(fmt::format("annualization needs individual ages, found group {}", format_age(a)));
    if (layer.method == SeasonalMethod::Seasonal && phi == nullptr)
        throw ConfigError("annualizing a seasonal-method layer needs the seasonal effect");
    const SeasonalEffect *factor = layer.method == SeasonalMethod::Seasonal ? phi : nullptr;

    CovidLayer out = layer;
    const auto &years = layer.grid.years();
    const Eigen::Index nt = static_cast<Eigen::Index>(years.size());
    const Eigen::Index nx = layer.age_effect.size();
    const Eigen::MatrixXd mean = weekly_mean_factors(layer, factor);

    out.annualized = true;
    out.annual_ages = covered_range(layer.ages);
    out.annual_years = years;
    out.annual_year_effect = mean.array().log().colwise().sum().transpose();

    if (out.annual_year_effect.cwiseAbs().maxCoeff() <= 1e-13) {
        log().warn("{}:{}: annual period effect is zero; age effect set to uniform", layer.country,
                   to_code(layer.gender));
        out.annual_degenerate = true;
        out.annual_year_effect.setZero();
        out.annual_age_effect = Eigen::VectorXd::Constant(nx, 1.0 / std::sqrt(static_cast<double>(nx)));
        validate(out);
        return out;
    }

    Eigen::VectorXd v(nx);
    for (Eigen::Index i = 0; i < nx; ++i) {
        const int age = layer.ages[static_cast<std::size_t>(i)].low;
        Eigen::VectorXd mu(nt);
        for (Eigen::Index j = 0; j < nt; ++j) mu(j) = rates.at(age, years[static_cast<std::size_t>(j)]);
        v(i) = solve_annual_age_effect(mu, out.annual_year_effect, mean.row(i).transpose());
    }
    double norm = v.norm();
    if (!(norm > 0.0)) {
        out.annual_degenerate = true;
        out.annual_age_effect = Eigen::VectorXd::Constant(nx, 1.0 / std::sqrt(static_cast<double>(nx)));
        out.annual_year_effect.setZero();
        validate(out);
        return out;
    }
    if (v.sum() < 0.0) norm = -norm;
    out.annual_age_effect = v / norm;
    out.annual_year_effect *= norm;
    validate(out);
    return out;
}

const std::vector<std::string> &scenario_names() {
    static const std::vector<std::string> names{"completely-incidental", "completely-structural",
                                                "decreasing-impact",     "growing-impact",
                                                "new-normal",            "increased-resilience"};
    return names;
}

std::vector<ScenarioSpec> standard_scenarios(double x_last, double eta, int horizon) {
    const auto &n = scenario_names();
    std::vector<ScenarioSpec> specs{
        {n[0], 0.0, 0.0, eta, horizon},           {n[1], x_last, x_last, eta, horizon},
        {n[2], x_last, 0.0, eta, horizon},        {n[3], x_last, 1.25 * x_last, eta, horizon},
        {n[4], x_last, 0.25 * x_last, eta, horizon}, {n[5], x_last, -0.25 * x_last, eta, horizon},
    };
    for (const auto &s : specs) validate(s);
    return specs;
}

double scenario_value(const ScenarioSpec &spec, int h) {
    const double decay = std::pow(spec.eta, h);
    return spec.x_start * decay + (1.0 - decay) * spec.x_infinity;
}

Eigen::VectorXd build_scenario(const ScenarioSpec &spec) {
    validate(spec);
    Eigen::VectorXd x(spec.horizon);
    for (int h = 1; h <= spec.horizon; ++h) x(h - 1) = scenario_value(spec, h);
    return x;
}

Eigen::VectorXd extend_age_effect(const Eigen::VectorXd &effect, IntRange effect_ages, IntRange full) {
    if (effect.size() != effect_ages.size() || effect.size() == 0)
        throw DataError("age effect does not match its age range");
    Eigen::VectorXd out(full.size());
    for (int x = full.first; x <= full.last; ++x) {
        double v;
        if (x < effect_ages.first)
            v = 0.0;
        else if (x > effect_ages.last)
            v = effect(effect.size() - 1);
        else
            v = effect(effect_ages.offset(x));
        out(full.offset(x)) = v;
    }
    return out;
}

Eigen::MatrixXd scenario_mu(const Eigen::MatrixXd &mu_pre, const Eigen::VectorXd &age_effect,
                            const Eigen::VectorXd &period) {
    if (mu_pre.rows() != age_effect.size() || mu_pre.cols() != period.size())
        throw DataError("scenario inputs differ in shape");
    return (mu_pre.array() * (age_effect * period.transpose()).array().exp()).matrix();
}

Eigen::MatrixXd death_probabilities(const Eigen::MatrixXd &mu) { return (1.0 - (-mu.array()).exp()).matrix(); }

double life_expectancy(const Eigen::MatrixXd &q, int first_year, int age, int year, LifeTableKind kind, int max_age) {
    if (age < 0 || age > max_age) throw DataError(fmt::format("age {} outside 0..{}", age, max_age));
    if (q.rows() < max_age + 1) throw DataError(fmt::format("life table has {} ages, needs {}", q.rows(), max_age + 1));
    const int col0 = year - first_year;
    const int needed = kind == LifeTableKind::Cohort ? col0 + (max_age - age) : col0;
    if (col0 < 0 || needed >= q.cols())
        throw DataError(fmt::format("life table covers {} years from {}; {} life expectancy at {} in {} needs more",
                                    q.cols(), first_year, kind == LifeTableKind::Cohort ? "cohort" : "period", age,
                                    year));
    double survival = 1.0;
    double e = 0.0;
    for (int k = 0; age + k <= max_age; ++k) {
        const int col = kind == LifeTableKind::Cohort ? col0 + k : col0;
        const double qk = age + k == max_age ? 1.0 : q(age + k, col);
        e += survival * (1.0 - 0.5 * qk);
        survival *= 1.0 - qk;
    }
    return e;
}

ForecastSet build_forecast(const BaselineModel &model, const CovidLayer &annual, const std::vector<ScenarioSpec> &specs,
                           const ForecastOptions &options) {
    if (!annual.annualized) throw DataError("COVID layer has not been annualized");
    if (model.ages.first != 0) throw DataError("life tables need baseline ages starting at 0");
    if (specs.empty()) throw ConfigError("no scenarios requested");
    const int max_age = options.max_age;
    const int last = options.last_observed_year != 0 ? options.last_observed_year : annual.annual_years.back();
    int horizon = 0;
    for (const auto &s : specs) {
        validate(s);
        horizon = std::max(horizon, s.horizon);
    }
    // Extra years so that cohort values exist for every reported cell.
    const IntRange table_years{last + 1, last + horizon + max_age};
    const IntRange full_ages{0, max_age};
    const RateTable pre = pre_covid_rates(model, annual.country, annual.gender, table_years, max_age);
    const Eigen::VectorXd v = extend_age_effect(annual.annual_age_effect, annual.annual_ages, full_ages);

    ForecastSet set{annual.country, annual.gender, {}};
    for (const auto &spec : specs) {
        Eigen::VectorXd path(table_years.size());
        for (int h = 1; h <= table_years.size(); ++h) path(h - 1) = scenario_value(spec, h);
        const Eigen::MatrixXd mu = scenario_mu(pre.mu, v, path);
        const Eigen::MatrixXd q = death_probabilities(mu);

        ScenarioForecast f;
        f.scenario = spec.name;
        f.ages = full_ages;
        f.years = {last + 1, last + spec.horizon};
        f.max_age = max_age;
        f.period_effect = path.head(spec.horizon);
        f.mu = mu.leftCols(spec.horizon);
        f.q = q.leftCols(spec.horizon);
        f.e_period.resize(full_ages.size(), spec.horizon);
        f.e_cohort.resize(full_ages.size(), spec.horizon);
        for (int t = f.years.first; t <= f.years.last; ++t)
            for (int x = 0; x <= max_age; ++x) {
                f.e_period(x, f.years.offset(t)) =
                    life_expectancy(q, table_years.first, x, t, LifeTableKind::Period, max_age);
                f.e_cohort(x, f.years.offset(t)) =
                    life_expectancy(q, table_years.first, x, t, LifeTableKind::Cohort, max_age);
            }
        validate(f);
        set.scenarios.push_back(std::move(f));
    }
    return set;
}

} // namespace lilee
