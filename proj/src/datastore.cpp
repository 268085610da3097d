#include "lilee/datastore.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace lilee {

namespace {

constexpr std::string_view kColumnHeader = "key,index1,index2,value";
constexpr std::string_view kNoIndex = "-";

std::string join(const std::vector<std::string> &parts, char sep = ';') {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    if (text.empty()) {
        return out;
    }
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

std::string format_grid(const WeekGrid &grid) {
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < grid.years().size(); ++i) {
        parts.push_back(fmt::format("{}:{}", grid.years()[i], grid.weeks_per_year()[i]));
    }
    return join(parts);
}

std::string week_label(const WeekGrid &grid, int column) {
    return fmt::format("{}:{}", grid.year_at(column), grid.week_at(column));
}

class Writer {
public:
    explicit Writer(std::string schema) { out_ << "#schema:" << schema << " v1\n"; }

    void meta(const std::string &key, const std::string &value) { out_ << '#' << key << '=' << value << '\n'; }
    void provenance(const Provenance &p) {
        for (const auto &[k, v] : p) {
            meta(k, v);
        }
        out_ << kColumnHeader << '\n';
    }
    void row(std::string_view key, std::string_view i1, std::string_view i2, double value) {
        out_ << key << ',' << i1 << ',' << i2 << ',' << format_double(value) << '\n';
    }
    void vector(std::string_view key, std::string_view i1, const Eigen::VectorXd &v, int first_index) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            row(key, i1, std::to_string(first_index + i), v(i));
        }
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

struct Row {
    std::string key;
    std::string i1;
    std::string i2;
    double value = 0.0;
    int line = 0;
};

struct ParsedFile {
    std::string source;
    std::string schema;
    std::map<std::string, std::string> meta;
    int header_line = 0;
    int last_line = 0;
    std::vector<Row> rows;
};

ParsedFile parse(const std::string &text, const std::string &source) {
    ParsedFile file;
    file.source = source;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (number == 1) {
            const std::string prefix = "#schema:";
            const std::string suffix = " v1";
            if (!line.starts_with(prefix) || !line.ends_with(suffix) ||
                line.size() <= prefix.size() + suffix.size()) {
                throw ParseError(source, number, "expected '#schema:<TypeName> v1'");
            }
            file.schema = line.substr(prefix.size(), line.size() - prefix.size() - suffix.size());
            continue;
        }
        if (!have_header) {
            if (line == kColumnHeader) {
                have_header = true;
                file.header_line = number;
                continue;
            }
            if (!line.starts_with('#')) {
                throw ParseError(source, number, "expected metadata line or column header");
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ParseError(source, number, "metadata line must be '#key=value'");
            }
            file.meta[line.substr(1, eq - 1)] = line.substr(eq + 1);
            continue;
        }
        if (line.empty()) {
            throw ParseError(source, number, "empty line");
        }
        const auto fields = split(line, ',');
        if (fields.size() != 4) {
            throw ParseError(source, number, fmt::format("expected 4 fields, found {}", fields.size()));
        }
        Row row{fields[0], fields[1], fields[2], 0.0, number};
        const auto &v = fields[3];
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), row.value);
        if (ec != std::errc{} || ptr != v.data() + v.size()) {
            throw ParseError(source, number, fmt::format("invalid number '{}'", v));
        }
        file.rows.push_back(std::move(row));
    }
    if (number == 0) {
        throw ParseError(source, 1, "empty file");
    }
    if (!have_header) {
        throw ParseError(source, number + 1, "unexpected end of file before the column header");
    }
    file.last_line = number;
    return file;
}

/// Keyed access to rows that remembers which were consumed, so leftovers and
/// gaps both produce line-numbered errors.
class RowTable {
public:
    explicit RowTable(const ParsedFile &file) : file_(file) {
        for (std::size_t i = 0; i < file.rows.size(); ++i) {
            const auto &r = file.rows[i];
            auto [it, inserted] = index_.emplace(std::make_tuple(r.key, r.i1, r.i2), i);
            if (!inserted) {
                throw ParseError(file.source, r.line,
                                 fmt::format("duplicate row {},{},{}", r.key, r.i1, r.i2));
            }
        }
    }

    double need(const std::string &key, const std::string &i1, const std::string &i2) {
        auto it = index_.find(std::make_tuple(key, i1, i2));
        if (it == index_.end()) {
            throw ParseError(file_.source, file_.last_line + 1,
                             fmt::format("unexpected end of data: missing row {},{},{}", key, i1, i2));
        }
        used_.insert(it->second);
        return file_.rows[it->second].value;
    }

    Eigen::VectorXd vector(const std::string &key, const std::string &i1, int first, int count) {
        Eigen::VectorXd v(count);
        for (int i = 0; i < count; ++i) {
            v(i) = need(key, i1, std::to_string(first + i));
        }
        return v;
    }

    void finish() const {
        for (std::size_t i = 0; i < file_.rows.size(); ++i) {
            if (!used_.contains(i)) {
                const auto &r = file_.rows[i];
                throw ParseError(file_.source, r.line, fmt::format("unexpected row {},{},{}", r.key, r.i1, r.i2));
            }
        }
    }

private:
    const ParsedFile &file_;
    std::map<std::tuple<std::string, std::string, std::string>, std::size_t> index_;
    std::set<std::size_t> used_;
};

class Meta {
public:
    explicit Meta(const ParsedFile &file) : file_(file) {}

    const std::string &get(const std::string &key) const {
        auto it = file_.meta.find(key);
        if (it == file_.meta.end()) {
            throw ParseError(file_.source, file_.header_line, fmt::format("missing metadata '{}'", key));
        }
        return it->second;
    }

    template <typename F>
    auto parsed(const std::string &key, F &&f) const {
        try {
            return f(get(key));
        } catch (const ParseError &) {
            throw;
        } catch (const std::exception &e) {
            throw ParseError(file_.source, file_.header_line, fmt::format("metadata '{}': {}", key, e.what()));
        }
    }

    int integer(const std::string &key) const {
        return parsed(key, [&](const std::string &v) {
            int out = 0;
            auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
            if (ec != std::errc{} || ptr != v.data() + v.size()) {
                throw DataError("not an integer");
            }
            return out;
        });
    }

    double real(const std::string &key) const {
        return parsed(key, [&](const std::string &v) {
            double out = 0.0;
            auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
            if (ec != std::errc{} || ptr != v.data() + v.size()) {
                throw DataError("not a number");
            }
            return out;
        });
    }

    bool flag(const std::string &key) const { return integer(key) != 0; }
    IntRange range(const std::string &key) const { return parsed(key, [](const std::string &v) { return parse_range(v); }); }
    Gender gender(const std::string &key) const {
        return parsed(key, [](const std::string &v) { return gender_from_code(v); });
    }
    std::vector<std::string> list(const std::string &key) const { return split(get(key), ';'); }

    WeekGrid grid(const std::string &key) const {
        return parsed(key, [](const std::string &v) {
            std::vector<int> years;
            std::vector<int> weeks;
            for (const auto &part : split(v, ';')) {
                const auto colon = part.find(':');
                if (colon == std::string::npos) throw ConfigError(fmt::format("'{}' must be written YEAR:WEEKS", part));
                years.push_back(std::stoi(part.substr(0, colon)));
                weeks.push_back(std::stoi(part.substr(colon + 1)));
            }
            return WeekGrid(years, weeks);
        });
    }

    std::vector<AgeIndex> ages(const std::string &key) const {
        return parsed(key, [](const std::string &v) {
            std::vector<AgeIndex> out;
            for (const auto &part : split(v, ';')) {
                const auto dash = part.find('-');
                if (dash == std::string::npos) {
                    out.push_back(AgeIndex::individual(std::stoi(part)));
                } else {
                    out.push_back({std::stoi(part.substr(0, dash)), std::stoi(part.substr(dash + 1))});
                }
            }
            validate_age_groups(out);
            return out;
        });
    }

private:
    const ParsedFile &file_;
};

std::string format_ages(const std::vector<AgeIndex> &ages) {
    std::vector<std::string> parts;
    for (const auto &a : ages) {
        parts.push_back(format_age(a));
    }
    return join(parts);
}

// ---- writers -------------------------------------------------------------

std::string write(const BaselineModel &m, const Provenance &p) {
    Writer w("BaselineModel");
    w.meta("ages", format_range(m.ages));
    w.meta("years", format_range(m.years));
    w.meta("countries", join(m.countries));
    w.meta("series", join(m.time_series.names));
    w.meta("observations", std::to_string(m.time_series.observations));
    w.meta("zero_country_drift", m.time_series.zero_country_drift ? "1" : "0");
    w.provenance(p);
    for (const auto &[g, c] : m.common) {
        const std::string gc(to_code(g));
        w.vector("A", gc, c.A, m.ages.first);
        w.vector("B", gc, c.B, m.ages.first);
        w.vector("K", gc, c.K, m.years.first);
    }
    for (const auto &[key, c] : m.country) {
        const std::string k = format_key(key);
        w.vector("alpha", k, c.alpha, m.ages.first);
        w.vector("beta", k, c.beta, m.ages.first);
        w.vector("kappa", k, c.kappa, m.years.first);
    }
    const auto &ts = m.time_series;
    for (std::size_t i = 0; i < ts.names.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        w.row("drift", ts.names[i], kNoIndex, ts.drift(ii));
        w.row("tstat", ts.names[i], kNoIndex, ts.tstat(ii));
    }
    for (std::size_t i = 0; i < ts.names.size(); ++i) {
        for (std::size_t j = 0; j < ts.names.size(); ++j) {
            w.row("cov", ts.names[i], ts.names[j],
                  ts.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
    }
    return w.str();
}

std::string write(const CovidLayer &l, const Provenance &p) {
    Writer w("CovidLayer");
    w.meta("country", l.country);
    w.meta("gender", std::string(to_code(l.gender)));
    w.meta("method", std::to_string(static_cast<int>(l.method)));
    w.meta("ages", format_ages(l.ages));
    w.meta("weeks", format_grid(l.grid));
    w.meta("annualized", l.annualized ? "1" : "0");
    if (l.annualized) {
        w.meta("annual_degenerate", l.annual_degenerate ? "1" : "0");
        w.meta("annual_ages", format_range(l.annual_ages));
        std::vector<std::string> years;
        for (int y : l.annual_years) {
            years.push_back(std::to_string(y));
        }
        w.meta("annual_years", join(years));
    }
    w.provenance(p);
    for (std::size_t i = 0; i < l.ages.size(); ++i) {
        w.row("age_effect", std::to_string(l.ages[i].low), std::to_string(l.ages[i].high),
              l.age_effect(static_cast<Eigen::Index>(i)));
    }
    for (int c = 0; c < l.grid.columns(); ++c) {
        w.row("week_effect", std::to_string(l.grid.year_at(c)), std::to_string(l.grid.week_at(c)), l.week_effect(c));
    }
    if (l.annualized) {
        w.vector("annual_age_effect", kNoIndex, l.annual_age_effect, l.annual_ages.first);
        for (std::size_t i = 0; i < l.annual_years.size(); ++i) {
            w.row("annual_year_effect", kNoIndex, std::to_string(l.annual_years[i]),
                  l.annual_year_effect(static_cast<Eigen::Index>(i)));
        }
    }
    return w.str();
}

std::string write(const SeasonalEffect &s, const Provenance &p) {
    Writer w("SeasonalEffect");
    w.meta("country", s.country);
    w.meta("gender", std::string(to_code(s.gender)));
    w.meta("knots", std::to_string(s.knots));
    w.meta("knot_offset", format_double(s.knot_offset));
    w.provenance(p);
    w.vector("knot", kNoIndex, s.knot_values, 0);
    w.vector("phi", kNoIndex, s.phi, 1);
    return w.str();
}

std::string write(const CodaFit &f, const Provenance &p) {
    Writer w("CodaFit");
    w.meta("year", std::to_string(f.year));
    w.meta("gender", std::string(to_code(f.gender)));
    w.meta("ages", format_range(f.ages));
    w.meta("weeks", std::to_string(f.kappa.size()));
    w.meta("degenerate", f.degenerate ? "1" : "0");
    w.provenance(p);
    w.vector("alpha", kNoIndex, f.alpha, f.ages.first);
    w.vector("beta", kNoIndex, f.beta, f.ages.first);
    w.vector("kappa", kNoIndex, f.kappa, 1);
    w.row("explained_variance", kNoIndex, kNoIndex, f.explained_variance);
    return w.str();
}

std::string write(const AnnualPanel &panel, const Provenance &p) {
    Writer w("AnnualPanel");
    w.meta("countries", join(panel.countries));
    w.meta("ages", format_range(panel.ages));
    w.meta("years", format_range(panel.years));
    w.provenance(p);
    for (const auto &[key, s] : panel.cells) {
        const std::string k = format_key(key);
        for (int i = 0; i < panel.ages.size(); ++i) {
            for (int j = 0; j < panel.years.size(); ++j) {
                const std::string age = std::to_string(panel.ages.first + i);
                const std::string year = std::to_string(panel.years.first + j);
                w.row("deaths:" + k, age, year, s.deaths(i, j));
                w.row("exposures:" + k, age, year, s.exposures(i, j));
            }
        }
    }
    return w.str();
}

std::string write(const WeeklyPanel &panel, const Provenance &p) {
    Writer w("WeeklyPanel");
    w.meta("country", panel.country);
    w.meta("gender", std::string(to_code(panel.gender)));
    w.meta("ages", format_ages(panel.ages));
    w.meta("weeks", format_grid(panel.grid));
    w.provenance(p);
    for (std::size_t i = 0; i < panel.ages.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        for (int c = 0; c < panel.grid.columns(); ++c) {
            w.row("deaths", format_age(panel.ages[i]), week_label(panel.grid, c), panel.deaths(ii, c));
            w.row("exposures", format_age(panel.ages[i]), week_label(panel.grid, c), panel.exposures(ii, c));
        }
    }
    return w.str();
}

std::string write(const WeeklyDeaths &d, const Provenance &p) {
    Writer w("WeeklyDeaths");
    w.meta("country", d.country);
    w.meta("gender", std::string(to_code(d.gender)));
    w.meta("ages", format_ages(d.ages));
    w.meta("weeks", format_grid(d.grid));
    w.provenance(p);
    for (std::size_t i = 0; i < d.ages.size(); ++i) {
        for (int c = 0; c < d.grid.columns(); ++c) {
            w.row("deaths", format_age(d.ages[i]), week_label(d.grid, c), d.deaths(static_cast<Eigen::Index>(i), c));
        }
    }
    return w.str();
}

std::string write(const ScenarioForecast &f, const Provenance &p) {
    Writer w("ScenarioForecast");
    w.meta("scenario", f.scenario);
    w.meta("ages", format_range(f.ages));
    w.meta("years", format_range(f.years));
    w.meta("max_age", std::to_string(f.max_age));
    w.provenance(p);
    w.vector("period_effect", kNoIndex, f.period_effect, f.years.first);
    const std::pair<const char *, const Eigen::MatrixXd *> tables[] = {
        {"mu", &f.mu}, {"q", &f.q}, {"e_period", &f.e_period}, {"e_cohort", &f.e_cohort}};
    for (const auto &[name, table] : tables) {
        for (int i = 0; i < f.ages.size(); ++i) {
            for (int j = 0; j < f.years.size(); ++j) {
                w.row(name, std::to_string(f.ages.first + i), std::to_string(f.years.first + j), (*table)(i, j));
            }
        }
    }
    return w.str();
}

// ---- readers -------------------------------------------------------------

BaselineModel read_baseline(const ParsedFile &file) {
    Meta meta(file);
    RowTable rows(file);
    BaselineModel m;
    m.ages = meta.range("ages");
    m.years = meta.range("years");
    m.countries = meta.list("countries");
    m.time_series.names = meta.list("series");
    m.time_series.observations = meta.integer("observations");
    m.time_series.zero_country_drift = meta.flag("zero_country_drift");
    for (Gender g : kGenders) {
        const std::string gc(to_code(g));
        m.common[g] = {rows.vector("A", gc, m.ages.first, m.ages.size()),
                       rows.vector("B", gc, m.ages.first, m.ages.size()),
                       rows.vector("K", gc, m.years.first, m.years.size())};
        for (const auto &c : m.countries) {
            const std::string k = format_key({c, g});
            m.country[{c, g}] = {rows.vector("alpha", k, m.ages.first, m.ages.size()),
                                 rows.vector("beta", k, m.ages.first, m.ages.size()),
                                 rows.vector("kappa", k, m.years.first, m.years.size())};
        }
    }
    auto &ts = m.time_series;
    const auto n = static_cast<Eigen::Index>(ts.names.size());
    ts.drift.resize(n);
    ts.tstat.resize(n);
    ts.covariance.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        ts.drift(i) = rows.need("drift", ts.names[static_cast<std::size_t>(i)], std::string(kNoIndex));
        ts.tstat(i) = rows.need("tstat", ts.names[static_cast<std::size_t>(i)], std::string(kNoIndex));
        for (Eigen::Index j = 0; j < n; ++j) {
            ts.covariance(i, j) =
                rows.need("cov", ts.names[static_cast<std::size_t>(i)], ts.names[static_cast<std::size_t>(j)]);
        }
    }
    rows.finish();
    return m;
}

CovidLayer read_covid(const ParsedFile &file) {
    Meta meta(file);
    RowTable rows(file);
    CovidLayer l;
    l.country = meta.get("country");
    l.gender = meta.gender("gender");
    const int method = meta.integer("method");
    if (method != 1 && method != 2) {
        throw ParseError(file.source, file.header_line, "method must be 1 or 2");
    }
    l.method = static_cast<SeasonalMethod>(method);
    l.ages = meta.ages("ages");
    l.grid = meta.grid("weeks");
    l.age_effect.resize(static_cast<Eigen::Index>(l.ages.size()));
    for (std::size_t i = 0; i < l.ages.size(); ++i) {
        l.age_effect(static_cast<Eigen::Index>(i)) =
            rows.need("age_effect", std::to_string(l.ages[i].low), std::to_string(l.ages[i].high));
    }
    l.week_effect.resize(l.grid.columns());
    for (int c = 0; c < l.grid.columns(); ++c) {
        l.week_effect(c) = rows.need("week_effect", std::to_string(l.grid.year_at(c)), std::to_string(l.grid.week_at(c)));
    }
    l.annualized = meta.flag("annualized");
    if (l.annualized) {
        l.annual_degenerate = meta.flag("annual_degenerate");
        l.annual_ages = meta.range("annual_ages");
        l.annual_years = meta.parsed("annual_years", [](const std::string &v) {
            std::vector<int> years;
            for (const auto &y : split(v, ';')) {
                years.push_back(std::stoi(y));
            }
            return years;
        });
        l.annual_age_effect = rows.vector("annual_age_effect", std::string(kNoIndex), l.annual_ages.first,
                                          l.annual_ages.size());
        l.annual_year_effect.resize(static_cast<Eigen::Index>(l.annual_years.size()));
        for (std::size_t i = 0; i < l.annual_years.size(); ++i) {
            l.annual_year_effect(static_cast<Eigen::Index>(i)) =
                rows.need("annual_year_effect", std::string(kNoIndex), std::to_string(l.annual_years[i]));
        }
    }
    rows.finish();
    return l;
}

SeasonalEffect read_seasonal(const ParsedFile &file) {
    Meta meta(file);
    RowTable rows(file);
    SeasonalEffect s;
    s.country = meta.get("country");
    s.gender = meta.gender("gender");
    s.knots = meta.integer("knots");
    s.knot_offset = meta.real("knot_offset");
    if (s.knots < 4 || s.knots > 52) {
        throw ParseError(file.source, file.header_line, "knots must lie in 4..52");
    }
    s.knot_values = rows.vector("knot", std::string(kNoIndex), 0, s.knots);
    s.phi = rows.vector("phi", std::string(kNoIndex), 1, 53);
    rows.finish();
    return s;
}

CodaFit read_coda(const ParsedFile &file) {
    Meta meta(file);
    RowTable rows(file);
    CodaFit f;
    f.year = meta.integer("year");
    f.gender = meta.gender("gender");
    f.ages = meta.range("ages");
    f.degenerate = meta.flag("degenerate");
    const int weeks = meta.integer("weeks");
    f.alpha = rows.vector("alpha", std::string(kNoIndex), f.ages.first, f.ages.size());
    f.beta = rows.vector("beta", std::string(kNoIndex), f.ages.first, f.ages.size());
    f.kappa = rows.vector("kappa", std::string(kNoIndex), 1, weeks);
    f.explained_variance = rows.need("explained_variance", std::string(kNoIndex), std::string(kNoIndex));
    rows.finish();
    return f;
}

AnnualPanel read_annual(const ParsedFile &file) {
    Meta meta(file);
    RowTable rows(file);
    AnnualPanel panel;
    panel.countries = meta.list("countries");
    panel.ages = meta.range("ages");
    panel.years = meta.range("years");
    for (const auto &c : panel.countries) {
        for (Gender g : kGenders) {
            const std::string k = format_key({c, g});
            AnnualSeries s{Eigen::MatrixXd(panel.ages.size(), panel.years.size()),
                           Eigen::MatrixXd(panel.ages.size(), panel.years.size())};
            for (int i = 0; i < panel.ages.size(); ++i) {
                for (int j = 0; j < panel.years.size(); ++j) {
                    const std::string age = std::to_string(panel.ages.first + i);
                    const std::string year = std::to_string(panel.years.first + j);
                    s.deaths(i, j) = rows.need("deaths:" + k, age, year);
                    s.exposures(i, j) = rows.need("exposures:" + k, age, year);
                }
            }
            panel.cells[{c, g}] = std::move(s);
        }
    }
    rows.finish();
    return panel;
}

template <typename T>
T read_weekly(const ParsedFile &file, bool with_exposures) {
    Meta meta(file);
    RowTable rows(file);
    T out;
    out.country = meta.get("country");
    out.gender = meta.gender("gender");
    out.ages = meta.ages("ages");
    out.grid = meta.grid("weeks");
    const auto n = static_cast<Eigen::Index>(out.ages.size());
    Eigen::MatrixXd deaths(n, out.grid.columns());
    Eigen::MatrixXd exposures(n, out.grid.columns());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int c = 0; c < out.grid.columns(); ++c) {
            const std::string age = format_age(out.ages[static_cast<std::size_t>(i)]);
            const std::string week = week_label(out.grid, c);
            deaths(i, c) = rows.need("deaths", age, week);
            if (with_exposures) {
                exposures(i, c) = rows.need("exposures", age, week);
            }
        }
    }
    out.deaths = std::move(deaths);
    if constexpr (std::is_same_v<T, WeeklyPanel>) {
        out.exposures = std::move(exposures);
    }
    rows.finish();
    return out;
}

ScenarioForecast read_forecast(const ParsedFile &file) {
    Meta meta(file);
    RowTable rows(file);
    ScenarioForecast f;
    f.scenario = meta.get("scenario");
    f.ages = meta.range("ages");
    f.years = meta.range("years");
    f.max_age = meta.integer("max_age");
    f.period_effect = rows.vector("period_effect", std::string(kNoIndex), f.years.first, f.years.size());
    const std::pair<const char *, Eigen::MatrixXd *> tables[] = {
        {"mu", &f.mu}, {"q", &f.q}, {"e_period", &f.e_period}, {"e_cohort", &f.e_cohort}};
    for (const auto &[name, table] : tables) {
        table->resize(f.ages.size(), f.years.size());
        for (int i = 0; i < f.ages.size(); ++i) {
            for (int j = 0; j < f.years.size(); ++j) {
                (*table)(i, j) = rows.need(name, std::to_string(f.ages.first + i), std::to_string(f.years.first + j));
            }
        }
    }
    rows.finish();
    return f;
}

} // namespace

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

std::string schema_name(const Document &doc) {
    return std::visit(
        [](const auto &d) -> std::string {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, BaselineModel>) {
                return "BaselineModel";
            } else if constexpr (std::is_same_v<T, CovidLayer>) {
                return "CovidLayer";
            } else if constexpr (std::is_same_v<T, SeasonalEffect>) {
                return "SeasonalEffect";
            } else if constexpr (std::is_same_v<T, CodaFit>) {
                return "CodaFit";
            } else if constexpr (std::is_same_v<T, AnnualPanel>) {
                return "AnnualPanel";
            } else if constexpr (std::is_same_v<T, WeeklyPanel>) {
                return "WeeklyPanel";
            } else if constexpr (std::is_same_v<T, WeeklyDeaths>) {
                return "WeeklyDeaths";
            } else {
                return "ScenarioForecast";
            }
        },
        doc);
}

std::string serialize(const Document &doc, const Provenance &provenance) {
    return std::visit([&](const auto &d) { return write(d, provenance); }, doc);
}

void save_model(const Document &doc, const std::filesystem::path &path, const Provenance &provenance) {
    const auto parent = path.parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent)) {
        throw IoError(path.string(), "parent directory does not exist");
    }
    const std::string text = serialize(doc, provenance);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(path.string(), "cannot open for writing");
    }
    out << text;
    out.close();
    if (!out) {
        throw IoError(path.string(), "write failed");
    }
}

Document deserialize(const std::string &text, const std::string &source) {
    const ParsedFile file = parse(text, source);
    Document doc = [&]() -> Document {
        if (file.schema == "BaselineModel") {
            return read_baseline(file);
        }
        if (file.schema == "CovidLayer") {
            return read_covid(file);
        }
        if (file.schema == "SeasonalEffect") {
            return read_seasonal(file);
        }
        if (file.schema == "CodaFit") {
            return read_coda(file);
        }
        if (file.schema == "AnnualPanel") {
            return read_annual(file);
        }
        if (file.schema == "WeeklyPanel") {
            return read_weekly<WeeklyPanel>(file, true);
        }
        if (file.schema == "WeeklyDeaths") {
            return read_weekly<WeeklyDeaths>(file, false);
        }
        if (file.schema == "ScenarioForecast") {
            return read_forecast(file);
        }
        throw ParseError(source, 1, fmt::format("unknown schema '{}'", file.schema));
    }();
    std::visit(
        [](const auto &d) {
            if constexpr (!std::is_same_v<std::decay_t<decltype(d)>, WeeklyDeaths>) {
                validate(d);
            }
        },
        doc);
    return doc;
}

Document load_model(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path.string(), "cannot open for reading");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return deserialize(buffer.str(), path.string());
}

void write_table(const std::filesystem::path &path, const std::vector<std::string> &header,
                 const std::vector<std::vector<std::string>> &rows, const Provenance &provenance) {
    const auto parent = path.parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent)) {
        throw IoError(path.string(), "parent directory does not exist");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(path.string(), "cannot open for writing");
    }
    for (const auto &[k, v] : provenance) {
        out << '#' << k << '=' << v << '\n';
    }
    out << join(header, ',') << '\n';
    for (const auto &row : rows) {
        out << join(row, ',') << '\n';
    }
    if (!out) {
        throw IoError(path.string(), "write failed");
    }
}

} // namespace lilee
