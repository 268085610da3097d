#include "lilee/pipeline.hpp"

#include "lilee/baseline.hpp"
#include "lilee/coda.hpp"
#include "lilee/covid_layer.hpp"
#include "lilee/datastore.hpp"
#include "lilee/error.hpp"
#include "lilee/exposures.hpp"
#include "lilee/forecast.hpp"
#include "lilee/ingest.hpp"
#include "lilee/log.hpp"
#include "lilee/seasonal.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace lilee {

namespace fs = std::filesystem;

namespace {

std::string key_name(const std::string &country, Gender g) { return fmt::format("{}_{}", country, to_code(g)); }

WeekGrid sub_grid(const WeekGrid &grid, IntRange years) {
    std::vector<int> ys, ws;
    for (int y = years.first; y <= years.last; ++y) {
        if (!grid.has_year(y)) throw DataError(fmt::format("weekly data lack year {}", y));
        ys.push_back(y);
        ws.push_back(grid.weeks_in(y));
    }
    return WeekGrid(ys, ws);
}

Eigen::MatrixXd slice_columns(const Eigen::MatrixXd &m, const WeekGrid &grid, const WeekGrid &sub) {
    Eigen::MatrixXd out(m.rows(), sub.columns());
    for (int y : sub.years()) out.middleCols(sub.year_offset(y), sub.weeks_in(y)) = m.middleCols(grid.year_offset(y), sub.weeks_in(y));
    return out;
}

WeeklyDeaths slice_years(const WeeklyDeaths &d, IntRange years) {
    const WeekGrid sub = sub_grid(d.grid, years);
    return WeeklyDeaths{d.country, d.gender, d.ages, sub, slice_columns(d.deaths, d.grid, sub)};
}

std::vector<PopulationSnapshot> of_gender(const std::vector<PopulationSnapshot> &all, Gender g) {
    std::vector<PopulationSnapshot> out;
    for (const auto &s : all)
        if (s.gender == g) out.push_back(s);
    return out;
}

std::map<int, Eigen::VectorXd> weekly_totals(const WeeklyDeaths &d) {
    std::map<int, Eigen::VectorXd> out;
    const Eigen::RowVectorXd sums = d.deaths.colwise().sum();
    for (int y : d.grid.years()) out[y] = sums.segment(d.grid.year_offset(y), d.grid.weeks_in(y)).transpose();
    return out;
}

int method_from_config(const Config &cfg) {
    const int m = cfg.get_int("covid.method", 2);
    if (m != 1 && m != 2) throw ConfigError(fmt::format("covid.method must be 1 or 2, got {}", m));
    return m;
}

int granularity_from_config(const Config &cfg) {
    const std::string g = cfg.get_or("covid.granularity", "native");
    if (g == "native") return 0;
    if (g == "1" || g == "2" || g == "3") return g[0] - '0';
    throw ConfigError(fmt::format("covid.granularity must be native, 1, 2 or 3, got '{}'", g));
}

std::vector<std::string> fmt_row(std::initializer_list<std::string> items) { return {items}; }

} // namespace

Pipeline::Pipeline(Config config) : config_(std::move(config)) {
    output_dir_ = config_.get_path("output_dir");
    hash_ = config_.hash();
    countries_ = config_.get_list("countries");
    if (countries_.empty()) throw ConfigError("countries must list at least one country code");
}

const std::vector<std::string> &Pipeline::stages() {
    static const std::vector<std::string> names{"ingest",  "calibrate-baseline", "fit-seasonal", "calibrate-covid",
                                                "coda",    "annualize",          "forecast",     "report"};
    return names;
}

void Pipeline::run(const std::string &stage) {
    log().info("stage {} (config {})", stage, hash_);
    if (stage == "ingest")
        ingest();
    else if (stage == "calibrate-baseline")
        calibrate_baseline();
    else if (stage == "fit-seasonal")
        fit_seasonal();
    else if (stage == "calibrate-covid")
        calibrate_covid();
    else if (stage == "coda")
        coda();
    else if (stage == "annualize")
        annualize();
    else if (stage == "forecast")
        forecast();
    else if (stage == "report")
        report();
    else
        throw ConfigError(fmt::format("unknown stage '{}'", stage));
}

void Pipeline::run_all() {
    for (const auto &s : stages()) {
        if (s == "coda" && !config_.has("coda.country")) continue;
        run(s);
    }
}

fs::path Pipeline::stage_dir(const std::string &name) const {
    const fs::path dir = output_dir_ / name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir.string(), "cannot create output directory: " + ec.message());
    return dir;
}

fs::path Pipeline::require(const fs::path &path, const std::string &stage) const {
    if (!fs::exists(path)) throw DataError(fmt::format("{} not found: run {} first", path.string(), stage));
    return path;
}

void Pipeline::ingest() {
    const Config &cfg = config_;
    const fs::path dir = stage_dir("ingest");
    const Provenance prov{{"config_hash", hash_}, {"stage", "ingest"}};
    const IntRange base_years = cfg.get_range("baseline.years", IntRange{1970, 2019});
    const IntRange hist_years = cfg.get_range("historical.years", IntRange{2015, 2019});
    const IntRange seasonal_years = cfg.get_range("seasonal.years", IntRange{2010, 2019});
    const IntRange covid_years = cfg.get_range("covid.years", IntRange{2020, 2021});
    const int open_age = cfg.get_int("stmf.open_age", 110);
    const double backtest_threshold = cfg.get_double("exposures.backtest_threshold", 0.02);
    const double backtest_min_population = cfg.get_double("exposures.backtest_min_population", 1000.0);
    const IntRange hmd_years{std::min(base_years.first, hist_years.first), std::max(base_years.last, hist_years.last)};

    AnnualPanel annual;
    for (std::size_t i = 0; i < countries_.size(); ++i) {
        const auto &c = countries_[i];
        AnnualPanel p = parse_hmd_annual(cfg.get_path("hmd." + c + ".deaths"), cfg.get_path("hmd." + c + ".exposures"),
                                         c, hmd_years, {0, open_age});
        if (i == 0)
            annual = std::move(p);
        else
            merge_into(annual, p);
    }
    save_model(annual, dir / "annual.csv", prov);

    std::vector<std::vector<std::string>> backtests;
    const fs::path stmf_path = cfg.get_path("stmf.file");
    for (const auto &c : countries_) {
        const StmfData stmf = parse_stmf(stmf_path, c, open_age);
        const PopulationLayout layout =
            population_layout_from_string(cfg.get_or("population." + c + ".layout", "eurostat_annual"));
        const auto population = parse_population(cfg.get_path("population." + c + ".file"), layout, c);
        for (Gender g : kGenders) {
            auto it = stmf.by_gender.find(g);
            if (it == stmf.by_gender.end())
                throw DataError(fmt::format("weekly deaths for {}:{} missing", c, to_code(g)));
            const WeeklyDeaths &grouped = it->second;

            const WeeklyDeaths seasonal = slice_years(grouped, seasonal_years);
            const IntRange covered = covered_range(seasonal.ages);
            WeeklyDeaths totals{c, g, {AgeIndex{covered.first, covered.last}}, seasonal.grid,
                                seasonal.deaths.colwise().sum()};
            save_model(totals, dir / fmt::format("seasonal_{}.csv", key_name(c, g)), prov);

            const WeeklyDeaths individual = disaggregate_deaths(grouped, historical_age_totals(annual, c, g, hist_years));
            const WeekGrid grid = sub_grid(grouped.grid, covid_years);
            const auto snaps = of_gender(population, g);
            Eigen::MatrixXd exposures;
            if (layout == PopulationLayout::EurostatAnnual) {
                exposures = weekly_exposures_by_projection(snaps, individual, grid);
                for (std::size_t s = 0; s + 1 < snaps.size(); ++s) {
                    const int y = snaps[s].date.year;
                    if (snaps[s + 1].date.year != y + 1 || !individual.grid.has_year(y)) continue;
                    const int wt = individual.grid.weeks_in(y);
                    const double gap = backtest_projection(
                        snaps[s].counts, individual.deaths.middleCols(individual.grid.year_offset(y), wt), wt,
                        snaps[s + 1].counts, backtest_min_population);
                    if (gap > backtest_threshold)
                        log().warn("{}:{} backtest {}: relative gap {:.4f} above {}", c, to_code(g), y, gap,
                                   backtest_threshold);
                    backtests.push_back(fmt_row({c, std::string(to_code(g)), std::to_string(y), format_double(gap)}));
                }
            } else {
                exposures = weekly_exposures_monthly_interpolation(snaps, grid);
            }
            WeeklyPanel panel{c, g, individual.ages, grid, slice_columns(individual.deaths, individual.grid, grid),
                              exposures};
            validate(panel);
            save_model(panel, dir / fmt::format("weekly_{}.csv", key_name(c, g)), prov);
        }

        if (cfg.has("granular." + c + ".deaths")) {
            const StmfData granular = parse_stmf(cfg.get_path("granular." + c + ".deaths"), c, open_age);
            const auto monthly =
                parse_population(cfg.get_path("granular." + c + ".population"), PopulationLayout::NlMonthly, c);
            for (Gender g : kGenders) {
                const WeeklyDeaths &d = granular.by_gender.at(g);
                const WeekGrid grid = sub_grid(d.grid, covid_years);
                const auto snaps = of_gender(monthly, g);
                const Eigen::MatrixXd by_age = weekly_exposures_monthly_interpolation(snaps, grid);
                const IntRange pop_ages = snaps.front().ages;
                Eigen::MatrixXd exposures(static_cast<Eigen::Index>(d.ages.size()), grid.columns());
                for (std::size_t r = 0; r < d.ages.size(); ++r) {
                    const AgeIndex a = d.ages[r];
                    if (!pop_ages.contains(IntRange{a.low, a.high}))
                        throw DataError(fmt::format("monthly population of {} lacks ages {}", c, format_age(a)));
                    exposures.row(static_cast<Eigen::Index>(r)) =
                        by_age.middleRows(pop_ages.offset(a.low), a.size()).colwise().sum();
                }
                WeeklyPanel panel{c, g, d.ages, grid, slice_columns(d.deaths, d.grid, grid), exposures};
                validate(panel);
                save_model(panel, dir / fmt::format("granular_{}.csv", key_name(c, g)), prov);

                if (cfg.get_or("coda.country", "") == c) {
                    const IntRange coda_ages = cfg.get_range("coda.ages", IntRange{0, 98});
                    const WeeklyDeaths years = slice_years(d, cfg.get_range("coda.years", IntRange{2010, 2021}));
                    std::vector<int> rows;
                    for (std::size_t r = 0; r < years.ages.size(); ++r)
                        if (years.ages[r].is_individual() && coda_ages.contains(years.ages[r].low))
                            rows.push_back(static_cast<int>(r));
                    if (static_cast<int>(rows.size()) != coda_ages.size())
                        throw DataError(fmt::format("granular deaths of {} lack individual ages {}", c,
                                                    format_range(coda_ages)));
                    WeeklyDeaths coda_deaths{c, g, individual_ages(coda_ages), years.grid,
                                             years.deaths(rows, Eigen::all)};
                    save_model(coda_deaths, dir / fmt::format("coda_{}.csv", to_code(g)), prov);
                }
            }
        }
    }
    write_table(dir / "backtest.csv", {"country", "gender", "year", "max_relative_gap"}, backtests, prov);
}

void Pipeline::calibrate_baseline() {
    const Config &cfg = config_;
    const Provenance prov{{"config_hash", hash_}, {"stage", "calibrate-baseline"}};
    const AnnualPanel annual = load_as<AnnualPanel>(require(output_dir_ / "ingest" / "annual.csv", "ingest"));
    const AnnualPanel panel = annual.restrict(cfg.get_range("baseline.ages", IntRange{0, 90}),
                                              cfg.get_range("baseline.years", IntRange{1970, 2019}));
    CalibrationOptions options;
    options.tolerance = cfg.get_double("baseline.tolerance", 1e-10);
    options.max_iterations = cfg.get_int("baseline.max_iterations", 10000);
    const BaselineCalibration cal = lilee::calibrate_baseline(panel, options);

    const fs::path dir = stage_dir("baseline");
    save_model(cal.model, dir / "model.csv", prov);
    auto trace_rows = [](const std::vector<IterationRecord> &trace) {
        std::vector<std::vector<std::string>> rows;
        for (const auto &r : trace)
            rows.push_back(fmt_row({std::to_string(r.iteration), format_double(r.log_likelihood),
                                    format_double(r.max_change)}));
        return rows;
    };
    const std::vector<std::string> header{"iteration", "log_likelihood", "max_change"};
    for (const auto &[g, trace] : cal.common_trace)
        write_table(dir / fmt::format("trace_common_{}.csv", to_code(g)), header, trace_rows(trace), prov);
    for (const auto &[key, trace] : cal.country_trace)
        write_table(dir / fmt::format("trace_{}.csv", key_name(key.country, key.gender)), header, trace_rows(trace),
                    prov);
}

void Pipeline::fit_seasonal() {
    const Config &cfg = config_;
    const Provenance prov{{"config_hash", hash_}, {"stage", "fit-seasonal"}};
    SplineOptions options;
    options.knots = cfg.get_int("seasonal.knots", 12);
    options.knot_offset = cfg.get_double("seasonal.knot_offset", 0.0);
    const fs::path dir = stage_dir("seasonal");
    for (const auto &c : countries_)
        for (Gender g : kGenders) {
            const auto totals = load_as<WeeklyDeaths>(
                require(output_dir_ / "ingest" / fmt::format("seasonal_{}.csv", key_name(c, g)), "ingest"));
            const WeeklyFractions fractions = weekly_fractions(weekly_totals(totals));
            const SeasonalEffect effect = fit_seasonal_spline(fractions, options, c, g);
            save_model(effect, dir / fmt::format("{}.csv", key_name(c, g)), prov);

            const Eigen::MatrixXd grid = seasonal_grid(effect, 10);
            const Eigen::VectorXd avg = fractions.average();
            std::vector<std::vector<std::string>> rows;
            for (Eigen::Index i = 0; i < grid.rows(); ++i)
                rows.push_back(fmt_row({format_double(grid(i, 0)), format_double(grid(i, 1))}));
            write_table(dir / fmt::format("{}_grid.csv", key_name(c, g)), {"week", "phi"}, rows, prov);
            rows.clear();
            for (Eigen::Index w = 0; w < avg.size(); ++w)
                rows.push_back(fmt_row({std::to_string(w + 1), format_double(avg(w)), format_double(effect.phi(w))}));
            write_table(dir / fmt::format("{}_fractions.csv", key_name(c, g)), {"week", "average_fraction", "phi"},
                        rows, prov);
        }
}

void Pipeline::calibrate_covid() {
    const Config &cfg = config_;
    const Provenance prov{{"config_hash", hash_}, {"stage", "calibrate-covid"}};
    const int method = method_from_config(cfg);
    const int level = granularity_from_config(cfg);
    const IntRange covid_years = cfg.get_range("covid.years", IntRange{2020, 2021});
    const IntRange hist_years = cfg.get_range("historical.years", IntRange{2015, 2019});
    const auto model = load_as<BaselineModel>(require(output_dir_ / "baseline" / "model.csv", "calibrate-baseline"));
    const auto annual = load_as<AnnualPanel>(require(output_dir_ / "ingest" / "annual.csv", "ingest"));

    CovidOptions options;
    options.method = static_cast<SeasonalMethod>(method);
    options.calibration.tolerance = cfg.get_double("covid.tolerance", 1e-10);
    options.calibration.max_iterations = cfg.get_int("covid.max_iterations", 10000);

    const fs::path dir = stage_dir("covid");
    for (const auto &c : countries_)
        for (Gender g : kGenders) {
            const fs::path granular = output_dir_ / "ingest" / fmt::format("granular_{}.csv", key_name(c, g));
            const bool has_granular = cfg.has("granular." + c + ".deaths");
            WeeklyPanel panel = load_as<WeeklyPanel>(
                require(has_granular ? granular
                                     : output_dir_ / "ingest" / fmt::format("weekly_{}.csv", key_name(c, g)),
                        "ingest"));
            options.ages = has_granular ? cfg.get_range("covid.granular_ages", IntRange{40, 98})
                                        : cfg.get_range("covid.ages", IntRange{40, 95});
            const AgeVector historical = historical_age_totals(annual, c, g, hist_years);
            if (level == 1 && !has_granular)
                throw DataError(fmt::format(
                    "granularity level 1 requires individual-age data; {} only has grouped weekly deaths", c));
            if (has_granular || level != 0) panel = granularity_panel(level == 0 ? 1 : level, panel, historical);

            const RateTable rates =
                pre_covid_rates(model, c, g, covid_years, std::max(options.ages.last, model.ages.last));
            SeasonalEffect phi;
            if (options.method == SeasonalMethod::Seasonal)
                phi = load_as<SeasonalEffect>(
                    require(output_dir_ / "seasonal" / fmt::format("{}.csv", key_name(c, g)), "fit-seasonal"));
            const CovidLayer layer = fit_covid_layer(
                panel, rates, options.method == SeasonalMethod::Seasonal ? &phi : nullptr, options);
            save_model(layer, dir / fmt::format("{}.csv", key_name(c, g)), prov);

            // Observed, baseline-expected and fitted weekly deaths over the calibration ages.
            const WeeklyPanel sub = panel.restrict_ages(options.ages);
            const Eigen::MatrixXd predicted = predicted_deaths(
                sub, panel_rates(sub, rates), options.method == SeasonalMethod::Seasonal ? &phi : nullptr,
                options.method);
            const Eigen::MatrixXd fitted =
                (predicted.array() * (layer.age_effect * layer.week_effect.transpose()).array().exp()).matrix();
            std::vector<std::vector<std::string>> rows;
            for (int col = 0; col < sub.grid.columns(); ++col)
                rows.push_back(fmt_row({std::to_string(sub.grid.year_at(col)), std::to_string(sub.grid.week_at(col)),
                                        format_double(sub.deaths.col(col).sum()),
                                        format_double(predicted.col(col).sum()), format_double(fitted.col(col).sum())}));
            write_table(dir / fmt::format("{}_weekly.csv", key_name(c, g)),
                        {"year", "week", "observed", "expected", "fitted"}, rows, prov);
        }
}

void Pipeline::coda() {
    const Config &cfg = config_;
    if (!cfg.has("coda.country")) throw ConfigError("coda needs coda.country naming a country with granular deaths");
    const Provenance prov{{"config_hash", hash_}, {"stage", "coda"}};
    const IntRange ages = cfg.get_range("coda.ages", IntRange{0, 98});
    const fs::path dir = stage_dir("coda");
    std::vector<std::vector<std::string>> z_rows, summary;
    for (Gender g : kGenders) {
        const auto deaths =
            load_as<WeeklyDeaths>(require(output_dir_ / "ingest" / fmt::format("coda_{}.csv", to_code(g)), "ingest"));
        for (int y : deaths.grid.years()) {
            const Eigen::MatrixXd d = deaths.deaths.middleCols(deaths.grid.year_offset(y), deaths.grid.weeks_in(y));
            const CodaFit fit = coda_fit(d, ages, y, g);
            save_model(fit, dir / fmt::format("{}_{}.csv", y, to_code(g)), prov);
            summary.push_back(fmt_row({std::to_string(y), std::string(to_code(g)), format_double(fit.explained_variance),
                                       fit.degenerate ? "1" : "0"}));
            const Eigen::VectorXd z = standardized_weekly_deaths(d.colwise().sum().transpose());
            for (Eigen::Index w = 0; w < z.size(); ++w)
                z_rows.push_back(fmt_row({std::to_string(y), std::string(to_code(g)), std::to_string(w + 1),
                                          format_double(z(w)), format_double(fit.kappa(w))}));
        }
    }
    write_table(dir / "weekly.csv", {"year", "gender", "week", "z", "kappa"}, z_rows, prov);
    write_table(dir / "summary.csv", {"year", "gender", "explained_variance", "degenerate"}, summary, prov);
}

void Pipeline::annualize() {
    const Provenance prov{{"config_hash", hash_}, {"stage", "annualize"}};
    const auto model = load_as<BaselineModel>(require(output_dir_ / "baseline" / "model.csv", "calibrate-baseline"));
    const fs::path dir = stage_dir("annual");
    for (const auto &c : countries_)
        for (Gender g : kGenders) {
            const auto layer = load_as<CovidLayer>(
                require(output_dir_ / "covid" / fmt::format("{}.csv", key_name(c, g)), "calibrate-covid"));
            SeasonalEffect phi;
            if (layer.method == SeasonalMethod::Seasonal)
                phi = load_as<SeasonalEffect>(
                    require(output_dir_ / "seasonal" / fmt::format("{}.csv", key_name(c, g)), "fit-seasonal"));
            const auto &years = layer.grid.years();
            const IntRange ages = covered_range(layer.ages);
            const RateTable rates = pre_covid_rates(model, c, g, {years.front(), years.back()},
                                                    std::max(ages.last, model.ages.last));
            const CovidLayer annual =
                lilee::annualize(layer, layer.method == SeasonalMethod::Seasonal ? &phi : nullptr, rates);
            save_model(annual, dir / fmt::format("{}.csv", key_name(c, g)), prov);
        }
}

void Pipeline::forecast() {
    const Config &cfg = config_;
    const Provenance prov{{"config_hash", hash_}, {"stage", "forecast"}};
    const double eta = cfg.get_double("forecast.eta", 0.5);
    const int horizon = cfg.get_int("forecast.horizon", 50);
    ForecastOptions options;
    options.max_age = cfg.get_int("forecast.max_age", 120);
    std::vector<std::string> wanted = cfg.has("forecast.scenarios") ? cfg.get_list("forecast.scenarios")
                                                                    : std::vector<std::string>{"all"};
    if (wanted.size() == 1 && wanted[0] == "all") wanted = scenario_names();
    for (const auto &w : wanted)
        if (std::find(scenario_names().begin(), scenario_names().end(), w) == scenario_names().end())
            throw ConfigError(fmt::format("unknown scenario '{}'", w));

    std::vector<fs::path> inputs;
    for (const auto &c : countries_)
        for (Gender g : kGenders)
            inputs.push_back(require(output_dir_ / "annual" / fmt::format("{}.csv", key_name(c, g)), "annualize"));
    const auto model = load_as<BaselineModel>(require(output_dir_ / "baseline" / "model.csv", "calibrate-baseline"));
    const fs::path dir = stage_dir("forecast");
    for (const auto &path : inputs) {
        const auto annual = load_as<CovidLayer>(path);
        const double x_last = annual.annual_year_effect(annual.annual_year_effect.size() - 1);
        std::vector<ScenarioSpec> specs;
        for (const auto &s : standard_scenarios(x_last, eta, horizon))
            if (std::find(wanted.begin(), wanted.end(), s.name) != wanted.end()) specs.push_back(s);
        const ForecastSet set = build_forecast(model, annual, specs, options);
        for (const auto &f : set.scenarios)
            save_model(f, dir / fmt::format("{}_{}.csv", key_name(set.country, set.gender), f.scenario), prov);
    }
}

void Pipeline::report() {
    const Provenance prov{{"config_hash", hash_}, {"stage", "report"}};
    std::vector<std::vector<std::string>> rows;
    for (const auto &c : countries_)
        for (Gender g : kGenders) {
            const auto annual = load_as<CovidLayer>(
                require(output_dir_ / "annual" / fmt::format("{}.csv", key_name(c, g)), "annualize"));
            std::vector<std::string> xs;
            for (double x : annual.annual_year_effect) xs.push_back(format_double(x));
            const std::string x_text = fmt::format("{}", fmt::join(xs, ";"));

            std::vector<ScenarioForecast> found;
            for (const auto &name : scenario_names()) {
                const fs::path p = output_dir_ / "forecast" / fmt::format("{}_{}.csv", key_name(c, g), name);
                if (fs::exists(p)) found.push_back(load_as<ScenarioForecast>(p));
            }
            if (found.empty()) throw DataError(fmt::format("no forecasts for {}:{}: run forecast first", c, to_code(g)));
            const ScenarioForecast *reference = nullptr;
            for (const auto &f : found)
                if (f.scenario == scenario_names().front()) reference = &f;
            for (const auto &f : found) {
                const int last = f.years.size() - 1;
                auto delta = [&](const Eigen::MatrixXd ScenarioForecast::*table, int age, int col) {
                    if (!reference) return std::string();
                    return format_double((f.*table)(age, col) - (reference->*table)(age, col));
                };
                const int age85 = std::min(85, f.ages.last);
                rows.push_back(fmt_row({c, std::string(to_code(g)), x_text, f.scenario,
                                        format_double(f.e_period(0, 0)), delta(&ScenarioForecast::e_period, 0, 0),
                                        delta(&ScenarioForecast::e_period, age85, 0),
                                        delta(&ScenarioForecast::e_period, 0, last),
                                        delta(&ScenarioForecast::e_cohort, 0, 0),
                                        delta(&ScenarioForecast::e_cohort, age85, 0)}));
            }
        }
    stage_dir(".");
    write_table(output_dir_ / "report.csv",
                {"country", "gender", "annual_period_effect", "scenario", "e0_period_first", "d_e0_period_first",
                 "d_e85_period_first", "d_e0_period_last", "d_e0_cohort_first", "d_e85_cohort_first"},
                rows, prov);
}

} // namespace lilee
