#pragma once

#include "lilee/types.hpp"

#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lilee {

/// Reads an HMD 1x1 deaths file and the matching exposures file.
///
/// Layout: free-text header lines, then the column line `Year Age Female Male
/// Total`, then whitespace-separated rows. Age `110+` is read as 110. The
/// missing marker `.` is rejected inside the requested ranges, as is any
/// negative value or absent (year, age) cell.
AnnualPanel parse_hmd_annual(const std::filesystem::path &deaths_path, const std::filesystem::path &exposures_path,
                             const std::string &country, IntRange years, IntRange ages);

/// One row of an STMF-style weekly deaths file.
struct StmfRecord {
    std::string country;
    int year = 0;
    int week = 0;
    char sex = 'b';
    std::vector<double> deaths; // one entry per age group column
    bool split = false;
    bool split_sex = false;
    bool forecast = false;
};

struct StmfData {
    std::vector<AgeIndex> groups;
    std::map<Gender, WeeklyDeaths> by_gender;
};

/// Parses `CountryCode,Year,Week,Sex,<group columns...>[,Split][,SplitSex][,Forecast]`.
/// Group columns are `D<low>_<high>` or `D<low>p` for the open top group,
/// which is closed at `open_age_max`. Rows for other countries are skipped,
/// sex `b` rows are dropped, and week 0 of a year is added to the last week
/// of the previous year when that year is present.
StmfData parse_stmf(const std::filesystem::path &path, const std::string &country, int open_age_max = 110);

/// Parses the group columns of an STMF header, e.g. `D40_44` -> {40, 44}.
AgeIndex parse_stmf_group(const std::string &column, int open_age_max);

enum class PopulationLayout { EurostatAnnual, NlMonthly };

PopulationLayout population_layout_from_string(const std::string &name);

struct Date {
    int year = 0;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date &) const = default;
};

Date parse_date(const std::string &text);

struct PopulationSnapshot {
    Date date;
    std::string country;
    Gender gender = Gender::Male;
    IntRange ages;
    Eigen::VectorXd counts;
};

/// Parses `date,age,sex,count` rows (first line is that header). Annual files
/// must be dated January 1, monthly files the first of a month. Every
/// snapshot must cover the same contiguous age range.
std::vector<PopulationSnapshot> parse_population(const std::filesystem::path &path, PopulationLayout layout,
                                                 const std::string &country);

} // namespace lilee
