#pragma once

#include "lilee/baseline.hpp"
#include "lilee/exposures.hpp"
#include "lilee/types.hpp"

#include <map>
#include <vector>

namespace lilee {

/// Annual force of mortality for every row of `panel` and every year of its
/// grid. Groups take the mean of their member ages weighted by `weights`
/// (annual exposures by individual age); individual rows read `rates` directly.
Eigen::MatrixXd panel_rates(const WeeklyPanel &panel, const RateTable &rates, const RateTable *weights = nullptr);

/// Expected deaths E mu phi per cell; phi is ignored (taken as 1) for the
/// no-seasonal method and required for the seasonal one.
Eigen::MatrixXd predicted_deaths(const WeeklyPanel &panel, const Eigen::MatrixXd &row_rates,
                                 const SeasonalEffect *phi, SeasonalMethod method);

struct CovidFit {
    Eigen::VectorXd age_effect;
    Eigen::VectorXd week_effect;
    std::vector<IterationRecord> trace;
};

/// Maximizes sum(D b k - Dpred e^{b k}) over age effect b and week effect k
/// with |b| = 1 and sum(b) >= 0.
CovidFit calibrate_covid(const Eigen::MatrixXd &deaths, const Eigen::MatrixXd &predicted,
                         const CalibrationOptions &options = {});

double covid_log_likelihood(const Eigen::MatrixXd &deaths, const Eigen::MatrixXd &predicted,
                            const Eigen::VectorXd &age_effect, const Eigen::VectorXd &week_effect);

/// Gradient of covid_log_likelihood with respect to (age effect, week effect).
std::pair<Eigen::VectorXd, Eigen::VectorXd> covid_score(const Eigen::MatrixXd &deaths, const Eigen::MatrixXd &predicted,
                                                        const Eigen::VectorXd &age_effect,
                                                        const Eigen::VectorXd &week_effect);

struct CovidOptions {
    CalibrationOptions calibration;
    IntRange ages{40, 95};
    SeasonalMethod method = SeasonalMethod::Seasonal;
};

/// Restricts the panel to the calibration ages and fits the layer.
CovidLayer fit_covid_layer(const WeeklyPanel &panel, const RateTable &rates, const SeasonalEffect *phi,
                           const CovidOptions &options, const RateTable *weights = nullptr);

/// Age groups of a granularity level over `ages`: level 2 uses 5-year groups
/// with an open group from 95, level 3 the groups 0-14, 15-64, 65-74, 75-84
/// and 85+. Groups are clipped to `ages`.
std::vector<AgeIndex> granularity_groups(int level, IntRange ages);

/// Panel as seen at a granularity level: level 1 keeps the individual ages;
/// levels 2 and 3 aggregate them into groups and redistribute with the
/// historical age shares, as for grouped source data.
WeeklyPanel granularity_panel(int level, const WeeklyPanel &individual, const AgeVector &historical);

std::map<int, CovidLayer> run_granularity_study(const std::vector<int> &levels, const WeeklyPanel &individual,
                                                const AgeVector &historical, const RateTable &rates,
                                                const SeasonalEffect *phi, const CovidOptions &options);

} // namespace lilee
