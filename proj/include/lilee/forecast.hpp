#pragma once

#include "lilee/baseline.hpp"
#include "lilee/types.hpp"

#include <string>
#include <vector>

namespace lilee {

/// Mean over the weeks of year t of phi_w exp(b_x k_{t,w}), rows ages,
/// columns the layer's years. phi == nullptr means phi = 1.
Eigen::MatrixXd weekly_mean_factors(const CovidLayer &layer, const SeasonalEffect *phi);

/// Annual age effect V and period effect X reproducing the two-year survival
/// of the weekly layer; |V| = 1 with sum(V) >= 0. `rates` holds the pre-COVID
/// annual forces of mortality for the layer's ages and years.
CovidLayer annualize(const CovidLayer &layer, const SeasonalEffect *phi, const RateTable &rates);

/// Root of sum_t mu_t (exp(v X_t) - M_t) in [-10, 10].
double solve_annual_age_effect(const Eigen::VectorXd &mu, const Eigen::VectorXd &period,
                               const Eigen::VectorXd &mean_factor);

/// Names accepted by standard_scenarios and the --scenario flag.
const std::vector<std::string> &scenario_names();

/// The six scenarios: incidental (0 to 0), structural (X to X), decreasing
/// (X to 0), growing (X to 1.25X), new normal (X to 0.25X) and increased
/// resilience (X to -0.25X), where X is the last annual period effect.
std::vector<ScenarioSpec> standard_scenarios(double x_last, double eta = 0.5, int horizon = 50);

/// X for h = 1..horizon: x_start eta^h + (1 - eta^h) x_infinity.
Eigen::VectorXd build_scenario(const ScenarioSpec &spec);

/// Path value at one horizon.
double scenario_value(const ScenarioSpec &spec, int h);

/// V over `full`: zero below the calibrated ages, the top value above them.
Eigen::VectorXd extend_age_effect(const Eigen::VectorXd &effect, IntRange effect_ages, IntRange full);

/// mu_pre exp(V_x X_t) per cell; columns of mu_pre follow `period`.
Eigen::MatrixXd scenario_mu(const Eigen::MatrixXd &mu_pre, const Eigen::VectorXd &age_effect,
                            const Eigen::VectorXd &period);

Eigen::MatrixXd death_probabilities(const Eigen::MatrixXd &mu);

enum class LifeTableKind { Period, Cohort };

/// Remaining life expectancy at `age` in `year` from q (rows ages from 0,
/// columns years from `first_year`). Each year lived counts fully except the
/// year of death, which counts half; q at max_age is taken as 1.
double life_expectancy(const Eigen::MatrixXd &q, int first_year, int age, int year, LifeTableKind kind,
                       int max_age = 120);

struct ForecastOptions {
    int max_age = 120;
    /// Year after which forecasts start; defaults to the last annual year of the layer.
    int last_observed_year = 0;
};

/// Forecasts for each scenario over the years after the observed COVID
/// years. Cohort life expectancies use an internally extended table.
ForecastSet build_forecast(const BaselineModel &model, const CovidLayer &annual, const std::vector<ScenarioSpec> &specs,
                           const ForecastOptions &options = {});

} // namespace lilee
