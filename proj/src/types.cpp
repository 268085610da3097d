#include "lilee/types.hpp"

#include "lilee/error.hpp"
#include "lilee/seasonal.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>

namespace lilee {

namespace {

constexpr double kNormTolerance = 1e-10;
constexpr double kSumTolerance = 1e-8;
constexpr double kCodaSumTolerance = 1e-9;

int parse_int(std::string_view text, std::string_view what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError(fmt::format("invalid integer '{}' in {}", text, what));
    }
    return value;
}

void check_norm(const Eigen::VectorXd &v, const std::string &what) {
    const double norm = v.norm();
    if (!(std::abs(norm - 1.0) <= kNormTolerance)) {
        throw ValidationError("norm constraint", fmt::format("||{}|| = {:.17g}, expected 1", what, norm));
    }
}

void check_zero_sum(const Eigen::VectorXd &v, double tolerance, const std::string &what) {
    const double sum = v.sum();
    if (!(std::abs(sum) <= tolerance)) {
        throw ValidationError("sum constraint", fmt::format("sum({}) = {:.17g}, expected 0", what, sum));
    }
}

void check_size(Eigen::Index actual, Eigen::Index expected, const std::string &what) {
    if (actual != expected) {
        throw ValidationError("shape", fmt::format("{} has {} entries, expected {}", what, actual, expected));
    }
}

void check_finite(const Eigen::MatrixXd &m, const std::string &what) {
    if (!m.allFinite()) {
        throw ValidationError("finite values", what + " contains non-finite entries");
    }
}

} // namespace

std::string_view to_code(Gender gender) noexcept { return gender == Gender::Male ? "m" : "f"; }

Gender gender_from_code(std::string_view code) {
    if (code == "m") {
        return Gender::Male;
    }
    if (code == "f") {
        return Gender::Female;
    }
    throw DataError(fmt::format("unknown gender code '{}'", code));
}

IntRange parse_range(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw ConfigError(fmt::format("range '{}' must be written LO:HI", text));
    }
    IntRange range{parse_int(text.substr(0, colon), "range"), parse_int(text.substr(colon + 1), "range")};
    if (range.first > range.last) {
        throw ConfigError(fmt::format("range '{}' is empty", text));
    }
    return range;
}

std::string format_range(const IntRange &range) { return fmt::format("{}:{}", range.first, range.last); }

std::string format_age(const AgeIndex &age) {
    return age.is_individual() ? std::to_string(age.low) : fmt::format("{}-{}", age.low, age.high);
}

void validate_age_groups(std::span<const AgeIndex> ages) {
    if (ages.empty()) {
        throw ValidationError("age groups", "no ages given");
    }
    for (std::size_t i = 0; i < ages.size(); ++i) {
        if (ages[i].low > ages[i].high) {
            throw ValidationError("age groups", fmt::format("group {} has low > high", format_age(ages[i])));
        }
        if (i > 0 && ages[i].low != ages[i - 1].high + 1) {
            throw ValidationError("age groups", fmt::format("groups {} and {} are not contiguous",
                                                            format_age(ages[i - 1]), format_age(ages[i])));
        }
    }
}

std::vector<AgeIndex> individual_ages(IntRange ages) {
    std::vector<AgeIndex> out;
    out.reserve(static_cast<std::size_t>(ages.size()));
    for (int x = ages.first; x <= ages.last; ++x) {
        out.push_back(AgeIndex::individual(x));
    }
    return out;
}

IntRange covered_range(std::span<const AgeIndex> ages) {
    if (ages.empty()) {
        return {};
    }
    return {ages.front().low, ages.back().high};
}

std::string format_key(const PopulationKey &key) { return fmt::format("{}:{}", key.country, to_code(key.gender)); }

const AnnualSeries &AnnualPanel::at(const std::string &country, Gender gender) const {
    auto it = cells.find({country, gender});
    if (it == cells.end()) {
        throw DataError(fmt::format("annual panel has no data for {}:{}", country, to_code(gender)));
    }
    return it->second;
}

AnnualSeries &AnnualPanel::at(const std::string &country, Gender gender) {
    return const_cast<AnnualSeries &>(std::as_const(*this).at(country, gender));
}

AnnualSeries AnnualPanel::aggregate(Gender gender) const {
    AnnualSeries total{Eigen::MatrixXd::Zero(ages.size(), years.size()),
                       Eigen::MatrixXd::Zero(ages.size(), years.size())};
    for (const auto &country : countries) {
        const auto &series = at(country, gender);
        total.deaths += series.deaths;
        total.exposures += series.exposures;
    }
    return total;
}

AnnualPanel AnnualPanel::restrict(IntRange new_ages, IntRange new_years) const {
    if (!ages.contains(new_ages) || !years.contains(new_years)) {
        throw DataError(fmt::format("requested ages {} / years {} outside panel ages {} / years {}",
                                    format_range(new_ages), format_range(new_years), format_range(ages),
                                    format_range(years)));
    }
    AnnualPanel out{countries, new_years, new_ages, {}};
    for (const auto &[key, series] : cells) {
        out.cells[key] = AnnualSeries{
            series.deaths.block(ages.offset(new_ages.first), years.offset(new_years.first), new_ages.size(),
                                new_years.size()),
            series.exposures.block(ages.offset(new_ages.first), years.offset(new_years.first),
                                   new_ages.size(), new_years.size())};
    }
    return out;
}

void merge_into(AnnualPanel &target, const AnnualPanel &source) {
    if (target.countries.empty()) {
        target = source;
        return;
    }
    if (target.ages != source.ages || target.years != source.years) {
        throw DataError("cannot merge annual panels with different age or year ranges");
    }
    for (const auto &country : source.countries) {
        if (std::find(target.countries.begin(), target.countries.end(), country) != target.countries.end()) {
            throw DataError(fmt::format("country {} appears twice in the annual panel", country));
        }
        target.countries.push_back(country);
    }
    for (const auto &[key, series] : source.cells) {
        target.cells[key] = series;
    }
}

WeekGrid::WeekGrid(std::vector<int> years, std::vector<int> weeks_per_year)
    : years_(std::move(years)), weeks_(std::move(weeks_per_year)) {
    if (years_.size() != weeks_.size()) {
        throw ValidationError("week grid", "years and week counts differ in length");
    }
    for (std::size_t i = 0; i < years_.size(); ++i) {
        if (weeks_[i] != 52 && weeks_[i] != 53) {
            throw ValidationError("week grid",
                                  fmt::format("year {} has {} weeks, expected 52 or 53", years_[i], weeks_[i]));
        }
        if (i > 0 && years_[i] != years_[i - 1] + 1) {
            throw ValidationError("week grid", "years must be consecutive");
        }
        offsets_.push_back(columns_);
        columns_ += weeks_[i];
    }
}

bool WeekGrid::has_year(int year) const noexcept {
    return std::find(years_.begin(), years_.end(), year) != years_.end();
}

int WeekGrid::year_offset(int year) const {
    auto it = std::find(years_.begin(), years_.end(), year);
    if (it == years_.end()) {
        throw DataError(fmt::format("year {} not in week grid", year));
    }
    return offsets_[static_cast<std::size_t>(it - years_.begin())];
}

int WeekGrid::weeks_in(int year) const {
    auto it = std::find(years_.begin(), years_.end(), year);
    if (it == years_.end()) {
        throw DataError(fmt::format("year {} not in week grid", year));
    }
    return weeks_[static_cast<std::size_t>(it - years_.begin())];
}

int WeekGrid::column(int year, int week) const {
    const int weeks = weeks_in(year);
    if (week < 1 || week > weeks) {
        throw DataError(fmt::format("week {} outside 1..{} for year {}", week, weeks, year));
    }
    return year_offset(year) + week - 1;
}

int WeekGrid::year_at(int column) const {
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), column);
    return years_[static_cast<std::size_t>(it - offsets_.begin()) - 1];
}

int WeekGrid::week_at(int column) const {
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), column);
    return column - *(it - 1) + 1;
}

WeeklyPanel WeeklyPanel::restrict_ages(IntRange range) const {
    WeeklyPanel out{country, gender, {}, grid, {}, {}};
    std::vector<int> rows;
    for (std::size_t i = 0; i < ages.size(); ++i) {
        if (range.contains(ages[i].low) && range.contains(ages[i].high)) {
            rows.push_back(static_cast<int>(i));
            out.ages.push_back(ages[i]);
        }
    }
    if (out.ages.empty() || covered_range(out.ages) != range) {
        throw DataError(fmt::format("weekly panel {}:{} does not cover ages {}", country, to_code(gender),
                                    format_range(range)));
    }
    out.deaths = deaths(rows, Eigen::placeholders::all);
    out.exposures = exposures(rows, Eigen::placeholders::all);
    return out;
}

int TimeSeriesFit::index_of(const std::string &name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
        throw DataError(fmt::format("time series '{}' not fitted", name));
    }
    return static_cast<int>(it - names.begin());
}

double TimeSeriesFit::projection_drift(int index) const {
    const bool common = names[static_cast<std::size_t>(index)].starts_with("K:");
    return (zero_country_drift && !common) ? 0.0 : drift(index);
}

std::string common_series_name(Gender gender) { return fmt::format("K:{}", to_code(gender)); }

std::string country_series_name(const std::string &country, Gender gender) {
    return fmt::format("kappa:{}:{}", country, to_code(gender));
}

double CovidLayer::annual_year(int year) const {
    auto it = std::find(annual_years.begin(), annual_years.end(), year);
    if (!annualized || it == annual_years.end()) {
        throw DataError(fmt::format("no annual period effect for {} in {}:{}", year, country, to_code(gender)));
    }
    return annual_year_effect(it - annual_years.begin());
}

void validate(const AnnualPanel &panel) {
    if (panel.countries.empty()) {
        throw ValidationError("index completeness", "annual panel has no countries");
    }
    for (const auto &country : panel.countries) {
        for (Gender g : kGenders) {
            auto it = panel.cells.find({country, g});
            if (it == panel.cells.end()) {
                throw ValidationError("index completeness",
                                      fmt::format("missing series for {}:{}", country, to_code(g)));
            }
            const auto &s = it->second;
            const std::string name = format_key(it->first);
            check_size(s.deaths.rows(), panel.ages.size(), name + " deaths rows");
            check_size(s.deaths.cols(), panel.years.size(), name + " deaths columns");
            check_size(s.exposures.rows(), panel.ages.size(), name + " exposure rows");
            check_size(s.exposures.cols(), panel.years.size(), name + " exposure columns");
            check_finite(s.deaths, name + " deaths");
            check_finite(s.exposures, name + " exposures");
            for (Eigen::Index i = 0; i < s.deaths.rows(); ++i) {
                for (Eigen::Index j = 0; j < s.deaths.cols(); ++j) {
                    const double d = s.deaths(i, j);
                    const double e = s.exposures(i, j);
                    if (d < 0.0 || e < 0.0) {
                        throw ValidationError("nonnegative counts",
                                              fmt::format("{} age {} year {}", name, panel.ages.first + i,
                                                          panel.years.first + j));
                    }
                    if (e == 0.0 && d > 0.0) {
                        throw ValidationError("deaths without exposure",
                                              fmt::format("{} age {} year {}", name, panel.ages.first + i,
                                                          panel.years.first + j));
                    }
                }
            }
        }
    }
}

void validate(const WeeklyPanel &panel) {
    validate_age_groups(panel.ages);
    const std::string name = fmt::format("{}:{}", panel.country, to_code(panel.gender));
    check_size(panel.deaths.rows(), static_cast<Eigen::Index>(panel.ages.size()), name + " deaths rows");
    check_size(panel.deaths.cols(), panel.grid.columns(), name + " deaths columns");
    check_size(panel.exposures.rows(), static_cast<Eigen::Index>(panel.ages.size()), name + " exposure rows");
    check_size(panel.exposures.cols(), panel.grid.columns(), name + " exposure columns");
    check_finite(panel.deaths, name + " deaths");
    check_finite(panel.exposures, name + " exposures");
    if ((panel.deaths.array() < 0.0).any() || (panel.exposures.array() < 0.0).any()) {
        throw ValidationError("nonnegative counts", name);
    }
}

void validate(const BaselineModel &model) {
    const int n_ages = model.ages.size();
    const int n_years = model.years.size();
    for (const auto &[g, p] : model.common) {
        const std::string name = fmt::format("common {}", to_code(g));
        check_size(p.A.size(), n_ages, name + " A");
        check_size(p.B.size(), n_ages, name + " B");
        check_size(p.K.size(), n_years, name + " K");
        check_finite(p.A, name + " A");
        check_norm(p.B, "B:" + std::string(to_code(g)));
        check_zero_sum(p.K, kSumTolerance, "K:" + std::string(to_code(g)));
    }
    for (const auto &[key, p] : model.country) {
        const std::string name = format_key(key);
        check_size(p.alpha.size(), n_ages, name + " alpha");
        check_size(p.beta.size(), n_ages, name + " beta");
        check_size(p.kappa.size(), n_years, name + " kappa");
        check_finite(p.alpha, name + " alpha");
        check_norm(p.beta, "beta:" + name);
        check_zero_sum(p.kappa, kSumTolerance, "kappa:" + name);
    }
    const auto &ts = model.time_series;
    if (!ts.names.empty()) {
        const auto n = static_cast<Eigen::Index>(ts.names.size());
        check_size(ts.drift.size(), n, "drift");
        check_size(ts.tstat.size(), n, "t-statistics");
        check_size(ts.covariance.rows(), n, "covariance rows");
        check_size(ts.covariance.cols(), n, "covariance columns");
        check_finite(ts.covariance, "covariance");
        const double scale = std::max(1e-300, ts.covariance.cwiseAbs().maxCoeff());
        if ((ts.covariance - ts.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
            throw ValidationError("covariance symmetry", "covariance matrix is not symmetric");
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ts.covariance, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-10 * scale) {
            throw ValidationError("covariance semidefinite",
                                  fmt::format("smallest eigenvalue {:.6g}", eig.eigenvalues().minCoeff()));
        }
    }
}

void validate(const SeasonalEffect &effect) {
    if (effect.knots < 4) {
        throw ValidationError("knot count", fmt::format("{} knots, need at least 4", effect.knots));
    }
    check_size(effect.knot_values.size(), effect.knots, "seasonal knot values");
    check_size(effect.phi.size(), 53, "seasonal phi");
    check_finite(effect.phi, "seasonal phi");
    if ((effect.phi.array() <= 0.0).any()) {
        throw ValidationError("positivity", "seasonal effect must be strictly positive");
    }
    const double mean = effect.phi.head(52).mean();
    if (!(std::abs(mean - 1.0) <= kSumTolerance)) {
        throw ValidationError("mean-one normalization", fmt::format("mean phi = {:.17g}", mean));
    }
    if (effect.phi(52) != effect.phi(51)) {
        throw ValidationError("week 53 convention", "phi[53] must equal phi[52]");
    }
    const auto spline = seasonal_spline(effect);
    for (int w = 1; w <= 52; ++w) {
        if (std::abs(spline(w) - effect.at_week(w)) > 1e-10) {
            throw ValidationError("spline consistency", fmt::format("phi[{}] differs from the spline curve", w));
        }
    }
    // Periodic by construction; check the boundary numerically as well.
    const double eps = 1e-7;
    if (std::abs(spline(53.0 - eps) - spline(1.0 + eps)) > 1e-6 ||
        std::abs(spline.derivative(53.0 - eps) - spline.derivative(1.0 + eps)) > 1e-6) {
        throw ValidationError("cyclic continuity", "spline not continuous across the year boundary");
    }
}

void validate(const CovidLayer &layer) {
    validate_age_groups(layer.ages);
    const std::string name = fmt::format("{}:{}", layer.country, to_code(layer.gender));
    check_size(layer.age_effect.size(), static_cast<Eigen::Index>(layer.ages.size()), name + " age effect");
    check_size(layer.week_effect.size(), layer.grid.columns(), name + " week effect");
    check_finite(layer.age_effect, name + " age effect");
    check_finite(layer.week_effect, name + " week effect");
    check_norm(layer.age_effect, "age effect " + name);
    if (layer.age_effect.sum() < 0.0) {
        throw ValidationError("sign convention", "age effect must have a nonnegative sum");
    }
    if (layer.annualized) {
        check_size(layer.annual_age_effect.size(), layer.annual_ages.size(), name + " annual age effect");
        check_size(layer.annual_year_effect.size(), static_cast<Eigen::Index>(layer.annual_years.size()),
                   name + " annual year effect");
        check_finite(layer.annual_age_effect, name + " annual age effect");
        check_finite(layer.annual_year_effect, name + " annual year effect");
        check_norm(layer.annual_age_effect, "annual age effect " + name);
    }
}

void validate(const CodaFit &fit) {
    const int n = fit.ages.size();
    check_size(fit.alpha.size(), n, "coda alpha");
    check_size(fit.beta.size(), n, "coda beta");
    check_finite(fit.alpha, "coda alpha");
    check_finite(fit.beta, "coda beta");
    check_finite(fit.kappa, "coda kappa");
    check_zero_sum(fit.beta, kCodaSumTolerance, "coda beta");
    check_zero_sum(fit.kappa, kCodaSumTolerance, "coda kappa");
    check_norm(fit.beta, "coda beta");
    if (!(fit.explained_variance >= 0.0 && fit.explained_variance <= 1.0 + 1e-12)) {
        throw ValidationError("explained variance", fmt::format("{} outside [0, 1]", fit.explained_variance));
    }
}

void validate(const ScenarioSpec &spec) {
    if (!(spec.eta >= 0.0 && spec.eta <= 1.0)) {
        throw ValidationError("eta range", fmt::format("eta = {} must lie in [0, 1]", spec.eta));
    }
    if (spec.horizon < 0) {
        throw ValidationError("horizon", "horizon must be nonnegative");
    }
}

void validate(const ScenarioForecast &f) {
    check_size(f.mu.rows(), f.ages.size(), "forecast mu rows");
    check_size(f.mu.cols(), f.years.size(), "forecast mu columns");
    check_finite(f.mu, "forecast mu");
    for (Eigen::Index i = 0; i < f.q.rows(); ++i) {
        for (Eigen::Index j = 0; j < f.q.cols(); ++j) {
            const double q = f.q(i, j);
            const bool forced = f.ages.first + i == f.max_age;
            if (!forced && f.mu(i, j) > 0.0 && !(q > 0.0 && q < 1.0)) {
                throw ValidationError("death probability range",
                                      fmt::format("q = {} at age {}", q, f.ages.first + i));
            }
        }
    }
    if ((f.e_period.array() < 0.0).any() || (f.e_cohort.array() < 0.0).any()) {
        throw ValidationError("life expectancy", "negative life expectancy");
    }
}

} // namespace lilee
