#include "lilee/synthetic.hpp"

#include "lilee/error.hpp"
#include "lilee/exposures.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <numbers>

namespace lilee {

namespace {

double base_mortality(int x) {
    return 0.003 * std::exp(-1.3 * x) + 0.0004 * std::exp(-std::pow((x - 22.0) / 7.0, 2)) +
           4e-5 * std::exp(0.095 * x);
}

double country_size(std::size_t index) {
    static const double sizes[] = {1.0, 0.65, 3.8, 1.6, 4.5};
    return sizes[index % 5];
}

double gaussian(double s, double centre, double width) { return std::exp(-0.5 * std::pow((s - centre) / width, 2)); }

// Random walk starting at zero, then centred.
Eigen::VectorXd random_walk(int n, double drift, double sd, std::mt19937_64 &rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd k(n);
    k(0) = 0.0;
    for (int i = 1; i < n; ++i) k(i) = k(i - 1) + drift + sd * normal(rng);
    return k;
}

double poisson(double mean, std::mt19937_64 &rng) {
    if (!(mean > 0.0)) return 0.0;
    std::poisson_distribution<long long> d(mean);
    return static_cast<double>(d(rng));
}

int weeks_in(const SyntheticOptions &o, int year) {
    return std::find(o.long_years.begin(), o.long_years.end(), year) != o.long_years.end() ? 53 : 52;
}

void write_file(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out << text;
    if (!out) throw IoError(path.string(), "write failed");
}

} // namespace

double SyntheticTruth::log_mu(const std::string &c, Gender g, int age, int year) const {
    const auto &cp = common.at(g);
    const auto &lp = country.at({c, g});
    const int x = ages.offset(age);
    double k, kappa;
    if (year <= years.last) {
        k = cp.K(years.offset(year));
        kappa = lp.kappa(years.offset(year));
    } else {
        k = cp.K(cp.K.size() - 1) + drift * (year - years.last);
        kappa = lp.kappa(lp.kappa.size() - 1);
    }
    return cp.A(x) + cp.B(x) * k + lp.alpha(x) + lp.beta(x) * kappa;
}

SyntheticTruth make_truth(const SyntheticOptions &options) {
    std::mt19937_64 rng(options.seed);
    SyntheticTruth truth;
    truth.ages = options.ages;
    truth.years = options.historical_years;
    truth.norm_ages = {options.ages.first, std::min(options.ages.last, 90)};
    const int nx = truth.ages.size();
    const int nt = truth.years.size();
    auto norm_over = [&](const Eigen::VectorXd &v) {
        return v.segment(truth.ages.offset(truth.norm_ages.first), truth.norm_ages.size()).norm();
    };

    Eigen::VectorXd b(nx);
    for (int x = truth.ages.first; x <= truth.ages.last; ++x) b(truth.ages.offset(x)) = 1.4 - x / 100.0;
    b /= norm_over(b);
    const double mean_b = b.segment(0, truth.norm_ages.size()).mean();
    truth.drift = -0.012 / mean_b;

    for (Gender g : kGenders) {
        CommonParams p;
        p.A.resize(nx);
        for (int x = truth.ages.first; x <= truth.ages.last; ++x)
            p.A(truth.ages.offset(x)) = std::log(base_mortality(x)) + (g == Gender::Male ? std::log(1.3) : 0.0);
        p.B = b;
        p.K = random_walk(nt, truth.drift, 0.3 * std::abs(truth.drift), rng);
        const double shift = p.K.mean();
        p.K.array() -= shift;
        p.A += shift * p.B;
        truth.common[g] = p;
    }

    for (std::size_t ci = 0; ci < options.countries.size(); ++ci) {
        const auto &c = options.countries[ci];
        const double sign = ci % 2 == 0 ? -1.0 : 1.0;
        const double level = sign * (0.05 + 0.02 * static_cast<double>(ci));
        const double drift = ci < 2 ? -sign * 0.02 : 0.0;
        for (Gender g : kGenders) {
            CountryParams p;
            p.alpha.resize(nx);
            p.beta.resize(nx);
            for (int x = truth.ages.first; x <= truth.ages.last; ++x) {
                p.alpha(truth.ages.offset(x)) = level + 0.03 * std::sin(x / 15.0 + static_cast<double>(ci));
                p.beta(truth.ages.offset(x)) = 1.0 + 0.5 * std::cos(x / 20.0 + static_cast<double>(ci));
            }
            p.beta /= norm_over(p.beta);
            p.kappa = random_walk(nt, drift, 0.01, rng);
            const double shift = p.kappa.mean();
            p.kappa.array() -= shift;
            p.alpha += shift * p.beta;
            truth.country[{c, g}] = p;
        }
    }

    truth.seasonal.resize(53);
    for (int w = 1; w <= 52; ++w)
        truth.seasonal(w - 1) = 1.0 + options.seasonal_amplitude * std::cos(2.0 * std::numbers::pi * (w - 3) / 52.0);
    truth.seasonal.head(52) /= truth.seasonal.head(52).mean();
    truth.seasonal(52) = truth.seasonal(51);

    truth.pandemic_age.resize(nx);
    for (int x = truth.ages.first; x <= truth.ages.last; ++x)
        truth.pandemic_age(truth.ages.offset(x)) = std::clamp((x - 30.0) / 60.0, 0.0, 1.2);
    for (int year = options.weekly_years.first; year <= options.weekly_years.last; ++year) {
        const int wt = weeks_in(options, year);
        Eigen::VectorXd k = Eigen::VectorXd::Zero(wt);
        if (options.pandemic && (year == 2020 || year == 2021)) {
            for (int w = 1; w <= wt; ++w) {
                const double s = w + (year == 2021 ? 53.0 : 0.0);
                k(w - 1) = 0.55 * gaussian(s, 14.0, 2.5) + 0.35 * gaussian(s, 46.0, 5.0) + 0.25 * gaussian(s, 101.0, 4.0);
            }
        }
        truth.pandemic_weeks[year] = k;
    }
    return truth;
}

SyntheticWorld generate_world(const SyntheticOptions &options) {
    SyntheticWorld world;
    world.options = options;
    world.truth = make_truth(options);
    const SyntheticTruth &truth = world.truth;
    std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);

    const IntRange ages = options.ages;
    const int nx = ages.size();
    const int first_year = options.historical_years.first;
    const int last_pop_year = options.weekly_years.last + 1;
    const IntRange pop_years{first_year, last_pop_year};

    world.annual.countries = options.countries;
    world.annual.years = options.historical_years;
    world.annual.ages = ages;

    for (std::size_t ci = 0; ci < options.countries.size(); ++ci) {
        const std::string &c = options.countries[ci];
        for (Gender g : kGenders) {
            const double births_level = options.births * country_size(ci) * (g == Gender::Male ? 1.05 : 1.0);
            auto births = [&](int year) {
                return births_level * (year >= 1946 && year <= 1955 ? 1.0 + options.baby_boom : 1.0);
            };
            auto mu = [&](int x, int year) { return std::exp(truth.log_mu(c, g, x, year)); };
            // Weekly-average excess factor of a pandemic year.
            auto annual_factor = [&](int x, int year) {
                auto it = truth.pandemic_weeks.find(year);
                if (it == truth.pandemic_weeks.end()) return 1.0;
                const Eigen::VectorXd &k = it->second;
                double s = 0.0;
                for (int w = 1; w <= k.size(); ++w)
                    s += truth.seasonal(w - 1) * std::exp(truth.pandemic_age(ages.offset(x)) * k(w - 1));
                return s / static_cast<double>(k.size());
            };

            // January 1 populations, rows ages, columns years.
            Eigen::MatrixXd pop(nx, pop_years.size());
            for (int x = ages.first; x <= ages.last; ++x) {
                const int top = x == ages.last ? ages.last + 20 : x;
                double count = 0.0;
                for (int a = x; a <= top; ++a) {
                    double s = births(first_year - 1 - a) * std::exp(-0.5 * mu(0, first_year));
                    for (int j = 0; j < a; ++j) s *= std::exp(-mu(std::min(j, ages.last), first_year));
                    count += s;
                }
                pop(ages.offset(x), 0) = std::round(count);
            }
            for (int y = first_year; y < last_pop_year; ++y) {
                const int col = pop_years.offset(y);
                auto survive = [&](int x) { return std::exp(-mu(x, y) * annual_factor(x, y)); };
                pop(0, col + 1) = std::round(births(y) * std::sqrt(survive(ages.first)));
                for (int x = ages.first + 1; x < ages.last; ++x)
                    pop(ages.offset(x), col + 1) = std::round(pop(ages.offset(x - 1), col) * survive(x - 1));
                pop(nx - 1, col + 1) = std::round(pop(nx - 2, col) * survive(ages.last - 1) +
                                                  pop(nx - 1, col) * survive(ages.last));
            }

            AnnualSeries series{Eigen::MatrixXd(nx, truth.years.size()), Eigen::MatrixXd(nx, truth.years.size())};
            for (int y = truth.years.first; y <= truth.years.last; ++y)
                for (int x = ages.first; x <= ages.last; ++x) {
                    const double e =
                        0.5 * (pop(ages.offset(x), pop_years.offset(y)) + pop(ages.offset(x), pop_years.offset(y) + 1));
                    series.exposures(ages.offset(x), truth.years.offset(y)) = std::round(e * 100.0) / 100.0;
                    series.deaths(ages.offset(x), truth.years.offset(y)) =
                        poisson(series.exposures(ages.offset(x), truth.years.offset(y)) * mu(x, y), rng);
                }
            world.annual.cells[{c, g}] = std::move(series);

            std::vector<int> years, weeks;
            for (int y = options.weekly_years.first; y <= options.weekly_years.last; ++y) {
                years.push_back(y);
                weeks.push_back(weeks_in(options, y));
            }
            WeekGrid grid(years, weeks);
            auto population_on = [&](int x, int y, int day) {
                const double f = static_cast<double>(day) / WeeklyConventions::year_days;
                return (1.0 - f) * pop(ages.offset(x), pop_years.offset(y)) +
                       f * pop(ages.offset(x), pop_years.offset(y) + 1);
            };
            Eigen::MatrixXd wexp(nx, grid.columns());
            Eigen::MatrixXd wdeaths(nx, grid.columns());
            for (int y : years) {
                const int wt = grid.weeks_in(y);
                const Eigen::VectorXd &k = truth.pandemic_weeks.at(y);
                for (int w = 1; w <= wt; ++w) {
                    const int col = grid.column(y, w);
                    const int ww = std::min(w, WeeklyConventions::weeks_per_year);
                    for (int x = ages.first; x <= ages.last; ++x) {
                        const double e = 0.5 * (population_on(x, y, 7 * (ww - 1)) + population_on(x, y, 7 * ww)) *
                                         WeeklyConventions::exposure_scale;
                        wexp(ages.offset(x), col) = e;
                        const double rate = mu(x, y) * truth.seasonal(w - 1) *
                                            std::exp(truth.pandemic_age(ages.offset(x)) * k(w - 1));
                        wdeaths(ages.offset(x), col) = poisson(e * rate, rng);
                    }
                }
            }
            world.weekly[{c, g}] = WeeklyDeaths{c, g, individual_ages(ages), grid, wdeaths};
            world.weekly_exposures[{c, g}] = wexp;

            auto last = options.population_last_year.find(c);
            const int jan_first = last != options.population_last_year.end() ? last->second : 2015;
            const int jan_last = last != options.population_last_year.end() ? last->second : last_pop_year;
            for (int y = jan_first; y <= jan_last; ++y) {
                world.january[{c, g}].push_back(
                    PopulationSnapshot{{y, 1, 1}, c, g, ages, pop.col(pop_years.offset(y))});
            }
            if (c == options.granular_country) {
                for (int y = 2020; y <= 2021; ++y)
                    for (int m = 1; m <= 12; ++m) {
                        Eigen::VectorXd counts(nx);
                        for (int x = ages.first; x <= ages.last; ++x)
                            counts(ages.offset(x)) = std::round(population_on(x, y, WeeklyConventions::month_start(m)));
                        world.monthly[{c, g}].push_back(PopulationSnapshot{{y, m, 1}, c, g, ages, counts});
                    }
                world.monthly[{c, g}].push_back(
                    PopulationSnapshot{{2022, 1, 1}, c, g, ages, pop.col(pop_years.offset(2022))});
            }
        }
    }
    return world;
}

AnnualPanel generate_baseline_panel(const SyntheticTruth &truth, IntRange ages, IntRange years, double exposure,
                                    std::mt19937_64 &rng) {
    AnnualPanel panel;
    for (const auto &[key, params] : truth.country)
        if (std::find(panel.countries.begin(), panel.countries.end(), key.country) == panel.countries.end())
            panel.countries.push_back(key.country);
    panel.years = years;
    panel.ages = ages;
    for (const auto &c : panel.countries)
        for (Gender g : kGenders) {
            AnnualSeries s{Eigen::MatrixXd(ages.size(), years.size()),
                           Eigen::MatrixXd::Constant(ages.size(), years.size(), exposure)};
            for (int t = years.first; t <= years.last; ++t)
                for (int x = ages.first; x <= ages.last; ++x)
                    s.deaths(ages.offset(x), years.offset(t)) =
                        poisson(exposure * std::exp(truth.log_mu(c, g, x, t)), rng);
            panel.cells[{c, g}] = std::move(s);
        }
    return panel;
}

std::vector<AgeIndex> stmf_groups(IntRange ages) {
    std::vector<AgeIndex> groups;
    for (int low = ages.first; low < 90; low += 5) groups.push_back({low, low + 4});
    groups.push_back({90, ages.last});
    return groups;
}

namespace {

std::string hmd_text(const SyntheticWorld &world, const std::string &c, bool exposures) {
    const auto &panel = world.annual;
    std::string out = fmt::format("{}, {} (period 1x1)\tsynthetic data, seed {}\n\n", c,
                                  exposures ? "Exposure to risk" : "Deaths", world.options.seed);
    out += "  Year      Age         Female          Male         Total\n";
    const auto &f = panel.at(c, Gender::Female);
    const auto &m = panel.at(c, Gender::Male);
    for (int t = panel.years.first; t <= panel.years.last; ++t)
        for (int x = panel.ages.first; x <= panel.ages.last; ++x) {
            const int i = panel.ages.offset(x);
            const int j = panel.years.offset(t);
            const double fv = exposures ? f.exposures(i, j) : f.deaths(i, j);
            const double mv = exposures ? m.exposures(i, j) : m.deaths(i, j);
            const std::string age = x == panel.ages.last ? fmt::format("{}+", x) : fmt::format("{}", x);
            out += fmt::format("  {:4d}  {:>7}  {:13.2f}  {:13.2f}  {:13.2f}\n", t, age, fv, mv, fv + mv);
        }
    return out;
}

std::string stmf_text(const SyntheticWorld &world, const std::vector<std::string> &countries,
                      const std::vector<AgeIndex> &groups, bool open_last) {
    std::string out = "CountryCode,Year,Week,Sex";
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const AgeIndex &a = groups[i];
        if (open_last && i + 1 == groups.size())
            out += fmt::format(",D{}p", a.low);
        else
            out += fmt::format(",D{}_{}", a.low, a.high);
    }
    out += ",Split,SplitSex,Forecast\n";
    for (const auto &c : countries) {
        const auto &grid = world.weekly.at({c, Gender::Male}).grid;
        for (int y : grid.years()) {
            const int wt = grid.weeks_in(y);
            // Deaths of the last week of a long year are split over that week
            // and week 0 of the next year, as in published weekly files.
            const bool split_next = wt == 53 && grid.has_year(y + 1);
            for (int w = 0; w <= grid.weeks_in(y); ++w) {
                int src_year = y, src_week = w;
                double fraction = 1.0;
                if (w == 0) {
                    if (!grid.has_year(y - 1) || grid.weeks_in(y - 1) != 53) continue;
                    src_year = y - 1;
                    src_week = 53;
                    fraction = 0.4;
                } else if (w == 53 && split_next) {
                    fraction = 0.6;
                }
                std::vector<double> sums[2];
                for (int gi = 0; gi < 2; ++gi) {
                    const auto &wd = world.weekly.at({c, kGenders[gi]});
                    const int col = wd.grid.column(src_year, src_week);
                    for (const AgeIndex &a : groups) {
                        double s = 0.0;
                        for (int x = a.low; x <= a.high; ++x)
                            s += wd.deaths(x - wd.ages.front().low, col);
                        sums[gi].push_back(s);
                    }
                }
                auto share = [&](double v, bool first_part) {
                    const double part = std::floor(v * 0.4);
                    if (fraction == 1.0) return v;
                    return first_part ? part : v - part;
                };
                const char *codes[3] = {"m", "f", "b"};
                for (int s = 0; s < 3; ++s) {
                    out += fmt::format("{},{},{},{}", c, y, w, codes[s]);
                    for (std::size_t i = 0; i < groups.size(); ++i) {
                        double v = s < 2 ? sums[s][i] : sums[0][i] + sums[1][i];
                        if (s < 2) {
                            v = share(v, w == 0);
                        } else {
                            v = share(sums[0][i], w == 0) + share(sums[1][i], w == 0);
                        }
                        out += fmt::format(",{}", v);
                    }
                    out += ",0,0,0\n";
                }
            }
        }
    }
    return out;
}

std::string population_text(const std::vector<PopulationSnapshot> &male, const std::vector<PopulationSnapshot> &female) {
    std::string out = "date,age,sex,count\n";
    for (std::size_t i = 0; i < male.size(); ++i) {
        for (const auto *snap : {&male[i], &female[i]}) {
            const std::string sex(to_code(snap->gender));
            for (int x = snap->ages.first; x <= snap->ages.last; ++x) {
                const std::string age = x == snap->ages.last ? fmt::format("{}+", x) : fmt::format("{}", x);
                out += fmt::format("{:04d}-{:02d}-01,{},{},{}\n", snap->date.year, snap->date.month, age, sex,
                                   snap->counts(snap->ages.offset(x)));
            }
        }
    }
    return out;
}

} // namespace

void write_synthetic_dataset(const SyntheticWorld &world, const std::filesystem::path &dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir / "hmd", ec);
    fs::create_directories(dir / "population", ec);
    if (ec) throw IoError(dir.string(), "cannot create dataset directories: " + ec.message());
    const auto &o = world.options;

    for (const auto &c : o.countries) {
        write_file(dir / "hmd" / (c + ".Deaths_1x1.txt"), hmd_text(world, c, false));
        write_file(dir / "hmd" / (c + ".Exposures_1x1.txt"), hmd_text(world, c, true));
        write_file(dir / "population" / (c + "_annual.csv"),
                   population_text(world.january.at({c, Gender::Male}), world.january.at({c, Gender::Female})));
    }
    write_file(dir / "stmf.csv", stmf_text(world, o.countries, stmf_groups(o.ages), true));

    const bool granular = !o.granular_country.empty() && world.monthly.count({o.granular_country, Gender::Male});
    if (granular) {
        std::vector<AgeIndex> groups = individual_ages({o.ages.first, 98});
        groups.push_back({99, o.ages.last});
        write_file(dir / "granular_weekly.csv", stmf_text(world, {o.granular_country}, groups, true));
        write_file(dir / "population" / (o.granular_country + "_monthly.csv"),
                   population_text(world.monthly.at({o.granular_country, Gender::Male}),
                                   world.monthly.at({o.granular_country, Gender::Female})));
    }

    std::string cfg = fmt::format("# Synthetic dataset, seed {}\n", o.seed);
    std::string list;
    for (const auto &c : o.countries) list += (list.empty() ? "" : ",") + c;
    cfg += fmt::format("countries = {}\n", list);
    cfg += "output_dir = out\n";
    cfg += fmt::format("seed = {}\n", o.seed);
    cfg += fmt::format("baseline.ages = {}:90\n", o.ages.first);
    cfg += fmt::format("baseline.years = {}\n", format_range(o.historical_years));
    cfg += "historical.years = 2015:2019\n";
    cfg += "stmf.file = stmf.csv\n";
    cfg += fmt::format("stmf.open_age = {}\n", o.ages.last);
    for (const auto &c : o.countries) {
        cfg += fmt::format("hmd.{0}.deaths = hmd/{0}.Deaths_1x1.txt\n", c);
        cfg += fmt::format("hmd.{0}.exposures = hmd/{0}.Exposures_1x1.txt\n", c);
        cfg += fmt::format("population.{0}.file = population/{0}_annual.csv\n", c);
        cfg += fmt::format("population.{}.layout = eurostat_annual\n", c);
    }
    if (granular) {
        cfg += fmt::format("granular.{}.deaths = granular_weekly.csv\n", o.granular_country);
        cfg += fmt::format("granular.{0}.population = population/{0}_monthly.csv\n", o.granular_country);
    }
    cfg += fmt::format("seasonal.years = {}:2019\n", o.weekly_years.first);
    cfg += "seasonal.knots = 12\n";
    cfg += "seasonal.knot_offset = 0\n";
    cfg += "covid.years = 2020:2021\n";
    cfg += "covid.method = 2\n";
    cfg += "covid.ages = 40:95\n";
    cfg += "covid.granular_ages = 40:98\n";
    cfg += "covid.granularity = native\n";
    if (granular) cfg += fmt::format("coda.country = {}\n", o.granular_country);
    cfg += fmt::format("coda.years = {}\n", format_range(o.weekly_years));
    cfg += "coda.ages = 0:98\n";
    cfg += "forecast.scenarios = all\n";
    cfg += "forecast.eta = 0.5\n";
    cfg += "forecast.horizon = 50\n";
    cfg += "forecast.max_age = 120\n";
    write_file(dir / "lilee.cfg", cfg);
}

} // namespace lilee
