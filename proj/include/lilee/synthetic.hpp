#pragma once

#include "lilee/ingest.hpp"
#include "lilee/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace lilee {

/// Li-Lee parameters of a synthetic world, defined over all ages (0..110)
/// and the historical years. B and beta have unit norm over `norm_ages`.
struct SyntheticTruth {
    IntRange ages;
    IntRange years;
    IntRange norm_ages;
    std::map<Gender, CommonParams> common;
    std::map<PopulationKey, CountryParams> country;
    double drift = 0.0;               // drift of K per year
    Eigen::VectorXd seasonal;         // phi_w for w = 1..53
    Eigen::VectorXd pandemic_age;     // over `ages`, before normalization
    std::map<int, Eigen::VectorXd> pandemic_weeks; // year -> week effect

    double log_mu(const std::string &c, Gender g, int age, int year) const;
};

struct SyntheticOptions {
    std::vector<std::string> countries{"NLD", "BEL", "GBR"};
    /// Country whose deaths are also written by individual age with a monthly population file.
    std::string granular_country = "NLD";
    /// Countries whose annual population file stops at the given year.
    std::map<std::string, int> population_last_year{{"GBR", 2019}};
    IntRange ages{0, 110};
    IntRange historical_years{1970, 2019};
    IntRange weekly_years{2010, 2021};
    std::vector<int> long_years{2015, 2020};
    double births = 100000.0;
    double baby_boom = 0.4;           // relative birth surplus for 1946-1955
    double seasonal_amplitude = 0.12;
    bool pandemic = true;
    std::uint64_t seed = 20200101;
};

/// A fully simulated dataset: annual panel, weekly deaths by individual age,
/// and January 1 and monthly populations, all per (country, gender).
struct SyntheticWorld {
    SyntheticOptions options;
    SyntheticTruth truth;
    AnnualPanel annual;
    std::map<PopulationKey, WeeklyDeaths> weekly;              // individual ages, weekly years
    std::map<PopulationKey, Eigen::MatrixXd> weekly_exposures; // true weekly exposures, same layout
    std::map<PopulationKey, std::vector<PopulationSnapshot>> january;
    std::map<PopulationKey, std::vector<PopulationSnapshot>> monthly; // granular country only
};

SyntheticTruth make_truth(const SyntheticOptions &options);

SyntheticWorld generate_world(const SyntheticOptions &options = {});

/// Baseline-only panel with constant exposure per cell, Poisson deaths.
AnnualPanel generate_baseline_panel(const SyntheticTruth &truth, IntRange ages, IntRange years, double exposure,
                                    std::mt19937_64 &rng);

/// Writes the world in the documented input layouts plus a run
/// configuration `lilee.cfg` referencing them.
void write_synthetic_dataset(const SyntheticWorld &world, const std::filesystem::path &dir);

/// Five-year groups up to 85-89 and an open group from 90.
std::vector<AgeIndex> stmf_groups(IntRange ages);

} // namespace lilee
