#pragma once

#include "lilee/types.hpp"

#include <map>
#include <random>
#include <string>
#include <vector>

namespace lilee {

struct CalibrationOptions {
    /// Stop when the relative log-likelihood improvement of a sweep drops below this.
    double tolerance = 1e-10;
    int max_iterations = 10000;
};

struct IterationRecord {
    int iteration = 0;
    double log_likelihood = 0.0;
    double max_change = 0.0;
};

/// Fit of ln m = offset + a_x + b_x k_t by alternating one-dimensional Newton
/// steps with step halving. Returned with sum(k) = 0 and |b| = 1.
struct BilinearFit {
    Eigen::VectorXd a;
    Eigen::VectorXd b;
    Eigen::VectorXd k;
    std::vector<IterationRecord> trace;
    bool converged = false;
};

/// Poisson log-likelihood including the constant sum(D ln E - ln D!), summed
/// over cells with positive exposure.
double poisson_log_likelihood(const Eigen::MatrixXd &deaths, const Eigen::MatrixXd &exposures,
                              const Eigen::MatrixXd &log_rate);

BilinearFit fit_bilinear(const Eigen::MatrixXd &deaths, const Eigen::MatrixXd &exposures,
                         const Eigen::MatrixXd &offset, const CalibrationOptions &options);

struct CommonFit {
    CommonParams params;
    std::vector<IterationRecord> trace;
};

struct CountryFit {
    CountryParams params;
    std::vector<IterationRecord> trace;
};

/// First stage: A, B, K on deaths and exposures summed over countries.
/// K is signed to decrease over the calibration period.
CommonFit calibrate_common(const AnnualSeries &aggregated, const CalibrationOptions &options = {});

/// Second stage: alpha, beta, kappa with B K as a fixed offset; sum(beta) >= 0.
CountryFit calibrate_country(const AnnualSeries &series, const CommonParams &common,
                             const CalibrationOptions &options = {});

Eigen::MatrixXd common_log_rate(const CommonParams &common);
Eigen::MatrixXd country_log_rate(const CommonParams &common, const CountryParams &country);

double common_log_likelihood(const AnnualSeries &series, const CommonParams &params);
double country_log_likelihood(const AnnualSeries &series, const CommonParams &common, const CountryParams &params);

/// Analytic gradients of the two stage log-likelihoods, laid out like the parameters.
CommonParams common_score(const AnnualSeries &series, const CommonParams &params);
CountryParams country_score(const AnnualSeries &series, const CommonParams &common, const CountryParams &params);

/// Random walks with drift for the named series (rows of `series`, one
/// column per year). Innovations are jointly normal; the covariance uses
/// divisor n, the number of differences.
TimeSeriesFit fit_time_series(const std::vector<std::string> &names, const Eigen::MatrixXd &series);

struct BaselineCalibration {
    BaselineModel model;
    std::map<Gender, std::vector<IterationRecord>> common_trace;
    std::map<PopulationKey, std::vector<IterationRecord>> country_trace;
};

/// Both stages for every gender and country of the panel, then the joint
/// time-series model.
BaselineCalibration calibrate_baseline(const AnnualPanel &panel, const CalibrationOptions &options = {});

/// Period effects beyond the last calibration year, one column per year
/// last+1 .. last+horizon, rows in time-series order.
struct PeriodPaths {
    int first_year = 0;
    Eigen::MatrixXd values;
};

/// K_t = K_last + theta h and kappa_t = kappa_last.
PeriodPaths central_paths(const BaselineModel &model, int horizon);

/// Same drifts plus innovations drawn from N(0, Sigma).
PeriodPaths simulate_paths(const BaselineModel &model, int horizon, std::mt19937_64 &rng);

/// Force of mortality on the central path; in-sample years use the fitted effects.
double baseline_mu(const BaselineModel &model, const std::string &country, Gender gender, int age, int year);

/// Force of mortality on a given path (years after the calibration period only
/// read the path; earlier years use the fitted effects).
double baseline_mu(const BaselineModel &model, const PeriodPaths &paths, const std::string &country, Gender gender,
                   int age, int year);

/// Central forces of mortality for all model ages (rows) over `years` (columns).
Eigen::MatrixXd baseline_mu_table(const BaselineModel &model, const std::string &country, Gender gender,
                                  IntRange years);

/// Annual forces of mortality by individual age (rows) and year (columns).
struct RateTable {
    IntRange ages;
    IntRange years;
    Eigen::MatrixXd mu;

    double at(int age, int year) const;
};

/// Central baseline rates extended to `max_age`: above the model ages, ln mu
/// continues the least-squares line through ages `fit_ages` of each year.
RateTable pre_covid_rates(const BaselineModel &model, const std::string &country, Gender gender, IntRange years,
                          int max_age, IntRange fit_ages = {80, 90});

/// Log-linear age extension of an existing table (see pre_covid_rates).
RateTable extend_rates(const RateTable &table, int max_age, IntRange fit_ages);

} // namespace lilee
