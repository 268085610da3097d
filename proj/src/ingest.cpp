#include "lilee/ingest.hpp"

#include "lilee/error.hpp"
#include "lilee/log.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace lilee {

namespace {

std::vector<std::string> read_lines(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(path.string(), "cannot open for reading");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

std::vector<std::string> tokens(const std::string &line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    std::string t;
    while (in >> t) {
        out.push_back(t);
    }
    return out;
}

std::vector<std::string> split_csv(const std::string &line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

std::optional<int> to_int(std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

std::optional<double> to_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

/// Age token with an optional trailing '+' for the open top age.
std::optional<int> to_age(std::string_view s) {
    if (!s.empty() && s.back() == '+') {
        s.remove_suffix(1);
    }
    return to_int(s);
}

struct HmdCell {
    double female;
    double male;
    bool female_missing;
    bool male_missing;
};

std::map<std::pair<int, int>, HmdCell> read_hmd(const std::filesystem::path &path) {
    const auto lines = read_lines(path);
    const std::string source = path.string();
    std::size_t i = 0;
    for (; i < lines.size(); ++i) {
        if (tokens(lines[i]) == std::vector<std::string>{"Year", "Age", "Female", "Male", "Total"}) {
            break;
        }
    }
    if (i == lines.size()) {
        throw ParseError(source, static_cast<int>(lines.size()) + 1,
                         "column header 'Year Age Female Male Total' not found");
    }
    std::map<std::pair<int, int>, HmdCell> cells;
    for (++i; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        const auto t = tokens(lines[i]);
        if (t.empty()) {
            continue;
        }
        if (t.size() != 5) {
            throw ParseError(source, line_no, fmt::format("expected 5 columns, found {}", t.size()));
        }
        const auto year = to_int(t[0]);
        const auto age = to_age(t[1]);
        if (!year || !age) {
            throw ParseError(source, line_no, "invalid year or age");
        }
        auto value = [&](const std::string &tok, bool &missing) {
            if (tok == ".") {
                missing = true;
                return 0.0;
            }
            const auto v = to_double(tok);
            if (!v) {
                throw ParseError(source, line_no, fmt::format("invalid number '{}'", tok));
            }
            if (*v < 0.0) {
                throw DataError(fmt::format("{}:{}: negative value {}", source, line_no, *v));
            }
            return *v;
        };
        HmdCell cell{};
        cell.female = value(t[2], cell.female_missing);
        cell.male = value(t[3], cell.male_missing);
        if (!cells.emplace(std::make_pair(*year, *age), cell).second) {
            throw DataError(fmt::format("{}:{}: duplicate year {} age {}", source, line_no, *year, *age));
        }
    }
    return cells;
}

void fill_hmd(const std::map<std::pair<int, int>, HmdCell> &cells, const std::string &source, IntRange years,
              IntRange ages, Eigen::MatrixXd &female, Eigen::MatrixXd &male) {
    female.resize(ages.size(), years.size());
    male.resize(ages.size(), years.size());
    for (int t = years.first; t <= years.last; ++t) {
        for (int x = ages.first; x <= ages.last; ++x) {
            auto it = cells.find({t, x});
            if (it == cells.end()) {
                throw DataError(fmt::format("{}: no data for year {} age {}", source, t, x));
            }
            if (it->second.female_missing || it->second.male_missing) {
                throw DataError(fmt::format("{}: missing marker for year {} age {}", source, t, x));
            }
            female(ages.offset(x), years.offset(t)) = it->second.female;
            male(ages.offset(x), years.offset(t)) = it->second.male;
        }
    }
}

} // namespace

AnnualPanel parse_hmd_annual(const std::filesystem::path &deaths_path, const std::filesystem::path &exposures_path,
                             const std::string &country, IntRange years, IntRange ages) {
    AnnualPanel panel{{country}, years, ages, {}};
    AnnualSeries female;
    AnnualSeries male;
    fill_hmd(read_hmd(deaths_path), deaths_path.string(), years, ages, female.deaths, male.deaths);
    fill_hmd(read_hmd(exposures_path), exposures_path.string(), years, ages, female.exposures, male.exposures);
    panel.cells[{country, Gender::Female}] = std::move(female);
    panel.cells[{country, Gender::Male}] = std::move(male);
    try {
        validate(panel);
    } catch (const ValidationError &e) {
        throw DataError(fmt::format("{}: {}", deaths_path.string(), e.what()));
    }
    return panel;
}

AgeIndex parse_stmf_group(const std::string &column, int open_age_max) {
    if (column.size() < 2 || column[0] != 'D') {
        throw DataError(fmt::format("'{}' is not an STMF age group column", column));
    }
    const std::string body = column.substr(1);
    if (body.back() == 'p') {
        const auto low = to_int(std::string_view(body).substr(0, body.size() - 1));
        if (!low || *low > open_age_max) {
            throw DataError(fmt::format("invalid open age group column '{}'", column));
        }
        return {*low, open_age_max};
    }
    const auto sep = body.find('_');
    if (sep == std::string::npos) {
        throw DataError(fmt::format("invalid age group column '{}'", column));
    }
    const auto low = to_int(std::string_view(body).substr(0, sep));
    const auto high = to_int(std::string_view(body).substr(sep + 1));
    if (!low || !high || *low > *high) {
        throw DataError(fmt::format("invalid age group column '{}'", column));
    }
    return {*low, *high};
}

StmfData parse_stmf(const std::filesystem::path &path, const std::string &country, int open_age_max) {
    const auto lines = read_lines(path);
    const std::string source = path.string();
    if (lines.empty()) {
        throw ParseError(source, 1, "empty file");
    }
    const auto header = split_csv(lines[0]);
    if (header.size() < 5 || header[0] != "CountryCode" || header[1] != "Year" || header[2] != "Week" ||
        header[3] != "Sex") {
        throw ParseError(source, 1, "header must start with CountryCode,Year,Week,Sex and name age groups");
    }
    StmfData data;
    std::optional<std::size_t> split_col;
    std::optional<std::size_t> split_sex_col;
    std::optional<std::size_t> forecast_col;
    std::size_t group_end = 4;
    for (std::size_t c = 4; c < header.size(); ++c) {
        if (header[c] == "Split") {
            split_col = c;
        } else if (header[c] == "SplitSex") {
            split_sex_col = c;
        } else if (header[c] == "Forecast") {
            forecast_col = c;
        } else {
            if (split_col || split_sex_col || forecast_col) {
                throw ParseError(source, 1, "age group columns must precede the flag columns");
            }
            try {
                data.groups.push_back(parse_stmf_group(header[c], open_age_max));
            } catch (const DataError &e) {
                throw ParseError(source, 1, e.what());
            }
            group_end = c + 1;
        }
    }
    if (data.groups.empty()) {
        throw ParseError(source, 1, "no age group columns");
    }
    try {
        validate_age_groups(data.groups);
    } catch (const ValidationError &e) {
        throw ParseError(source, 1, e.what());
    }

    std::map<std::tuple<Gender, int, int>, std::vector<double>> rows;
    std::set<std::tuple<int, int, char>> seen;
    int flagged = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        if (lines[i].empty()) {
            continue;
        }
        const auto f = split_csv(lines[i]);
        if (f.size() != header.size()) {
            throw ParseError(source, line_no, fmt::format("expected {} fields, found {}", header.size(), f.size()));
        }
        if (f[0] != country) {
            continue;
        }
        StmfRecord rec;
        rec.country = f[0];
        const auto year = to_int(f[1]);
        const auto week = to_int(f[2]);
        if (!year || !week) {
            throw ParseError(source, line_no, "invalid year or week");
        }
        rec.year = *year;
        rec.week = *week;
        if (rec.week < 0 || rec.week > 53) {
            throw DataError(fmt::format("{}:{}: week {} outside 0..53", source, line_no, rec.week));
        }
        if (f[3].size() != 1 || (f[3][0] != 'm' && f[3][0] != 'f' && f[3][0] != 'b')) {
            throw DataError(fmt::format("{}:{}: unknown sex code '{}'", source, line_no, f[3]));
        }
        rec.sex = f[3][0];
        if (!seen.emplace(rec.year, rec.week, rec.sex).second) {
            throw DataError(fmt::format("{}:{}: duplicate row for year {} week {} sex {}", source, line_no, rec.year,
                                        rec.week, rec.sex));
        }
        for (std::size_t c = 4; c < group_end; ++c) {
            const auto v = to_double(f[c]);
            if (!v) {
                throw ParseError(source, line_no, fmt::format("invalid count '{}'", f[c]));
            }
            if (*v < 0.0) {
                throw DataError(fmt::format("{}:{}: negative death count", source, line_no));
            }
            rec.deaths.push_back(*v);
        }
        auto flag = [&](const std::optional<std::size_t> &col) {
            return col && f[*col] != "0" && !f[*col].empty();
        };
        rec.split = flag(split_col);
        rec.split_sex = flag(split_sex_col);
        rec.forecast = flag(forecast_col);
        if (rec.split || rec.split_sex || rec.forecast) {
            ++flagged;
        }
        if (rec.sex == 'b') {
            continue;
        }
        rows[{rec.sex == 'm' ? Gender::Male : Gender::Female, rec.year, rec.week}] = std::move(rec.deaths);
    }
    if (flagged > 0) {
        log().warn("{}: {} rows carry Split/SplitSex/Forecast flags; their counts are used as-is", source, flagged);
    }

    const auto n_groups = static_cast<Eigen::Index>(data.groups.size());
    for (Gender g : kGenders) {
        std::map<int, std::map<int, const std::vector<double> *>> by_year;
        for (const auto &[key, counts] : rows) {
            if (std::get<0>(key) == g) {
                by_year[std::get<1>(key)][std::get<2>(key)] = &counts;
            }
        }
        if (by_year.empty()) {
            continue;
        }
        std::vector<int> years;
        std::vector<int> weeks;
        for (const auto &[year, wk] : by_year) {
            const int last = wk.rbegin()->first;
            if (last != 52 && last != 53) {
                throw DataError(fmt::format("{}: year {} ends at week {}, expected 52 or 53", source, year, last));
            }
            for (int w = 1; w <= last; ++w) {
                if (!wk.contains(w)) {
                    throw DataError(fmt::format("{}: {} sex {} year {} lacks week {}", source, country, to_code(g),
                                                year, w));
                }
            }
            years.push_back(year);
            weeks.push_back(last);
        }
        WeeklyDeaths out;
        out.country = country;
        out.gender = g;
        out.ages = data.groups;
        try {
            out.grid = WeekGrid(years, weeks);
        } catch (const ValidationError &e) {
            throw DataError(fmt::format("{}: {}", source, e.what()));
        }
        out.deaths = Eigen::MatrixXd::Zero(n_groups, out.grid.columns());
        for (const auto &[year, wk] : by_year) {
            for (const auto &[w, counts] : wk) {
                int column = -1;
                if (w == 0) {
                    if (!out.grid.has_year(year - 1)) {
                        log().warn("{}: week 0 of {} dropped, year {} not in file", source, year, year - 1);
                        continue;
                    }
                    column = out.grid.column(year - 1, out.grid.weeks_in(year - 1));
                } else {
                    column = out.grid.column(year, w);
                }
                for (Eigen::Index i = 0; i < n_groups; ++i) {
                    out.deaths(i, column) += (*counts)[static_cast<std::size_t>(i)];
                }
            }
        }
        data.by_gender[g] = std::move(out);
    }
    if (data.by_gender.empty()) {
        throw DataError(fmt::format("{}: no rows for country {}", source, country));
    }
    return data;
}

PopulationLayout population_layout_from_string(const std::string &name) {
    if (name == "eurostat_annual") {
        return PopulationLayout::EurostatAnnual;
    }
    if (name == "nl_monthly") {
        return PopulationLayout::NlMonthly;
    }
    throw ConfigError(fmt::format("unknown population layout '{}'", name));
}

Date parse_date(const std::string &text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw DataError(fmt::format("date '{}' is not YYYY-MM-DD", text));
    }
    const auto y = to_int(std::string_view(text).substr(0, 4));
    const auto m = to_int(std::string_view(text).substr(5, 2));
    const auto d = to_int(std::string_view(text).substr(8, 2));
    if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1 || *d > 31) {
        throw DataError(fmt::format("date '{}' is not YYYY-MM-DD", text));
    }
    return {*y, *m, *d};
}

std::vector<PopulationSnapshot> parse_population(const std::filesystem::path &path, PopulationLayout layout,
                                                 const std::string &country) {
    const auto lines = read_lines(path);
    const std::string source = path.string();
    if (lines.empty() || lines[0] != "date,age,sex,count") {
        throw ParseError(source, 1, "header must be 'date,age,sex,count'");
    }
    std::map<std::pair<Date, Gender>, std::map<int, double>> groups;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        if (lines[i].empty()) {
            continue;
        }
        const auto f = split_csv(lines[i]);
        if (f.size() != 4) {
            throw ParseError(source, line_no, fmt::format("expected 4 fields, found {}", f.size()));
        }
        Date date;
        try {
            date = parse_date(f[0]);
        } catch (const DataError &e) {
            throw ParseError(source, line_no, e.what());
        }
        if (date.day != 1 || (layout == PopulationLayout::EurostatAnnual && date.month != 1)) {
            throw DataError(fmt::format("{}:{}: date {} is not a valid snapshot date for this layout", source,
                                        line_no, f[0]));
        }
        const auto age = to_age(f[1]);
        const auto count = to_double(f[3]);
        if (!age || !count) {
            throw ParseError(source, line_no, "invalid age or count");
        }
        if (*count < 0.0) {
            throw DataError(fmt::format("{}:{}: negative population", source, line_no));
        }
        Gender g;
        try {
            g = gender_from_code(f[2]);
        } catch (const DataError &) {
            throw DataError(fmt::format("{}:{}: unknown sex code '{}'", source, line_no, f[2]));
        }
        if (!groups[{date, g}].emplace(*age, *count).second) {
            throw DataError(fmt::format("{}:{}: duplicate age {}", source, line_no, *age));
        }
    }
    if (groups.empty()) {
        throw DataError(fmt::format("{}: no population rows", source));
    }
    IntRange declared{groups.begin()->second.begin()->first, groups.begin()->second.rbegin()->first};
    for (const auto &[key, ages] : groups) {
        declared.first = std::min(declared.first, ages.begin()->first);
        declared.last = std::max(declared.last, ages.rbegin()->first);
    }
    std::vector<PopulationSnapshot> out;
    for (const auto &[key, ages] : groups) {
        PopulationSnapshot snap;
        snap.date = key.first;
        snap.gender = key.second;
        snap.country = country;
        snap.ages = declared;
        snap.counts.resize(declared.size());
        for (int x = declared.first; x <= declared.last; ++x) {
            auto it = ages.find(x);
            if (it == ages.end()) {
                throw DataError(fmt::format("{}: snapshot {:04}-{:02}-{:02} sex {} lacks age {}", source,
                                            key.first.year, key.first.month, key.first.day, to_code(key.second), x));
            }
            snap.counts(declared.offset(x)) = it->second;
        }
        out.push_back(std::move(snap));
    }
    return out;
}

} // namespace lilee
