#pragma once

#include "lilee/types.hpp"

namespace lilee {

struct CodaOptions {
    /// Add one to every count before closing; without it all counts must be positive.
    bool perturb = true;
};

/// Rank-one compositional fit of one year of weekly deaths (rows ages,
/// columns weeks 1..w_t). beta is signed so that its sum over ages 80 and
/// above (the top age if the range stops earlier) is positive.
CodaFit coda_fit(const Eigen::MatrixXd &deaths, IntRange ages, int year, Gender gender,
                 const CodaOptions &options = {});

/// Centred log-ratio transform of each row of a positive matrix.
Eigen::MatrixXd clr_rows(const Eigen::MatrixXd &positive);

/// Compositions (rows per week, summing to one) implied by alpha + kappa beta'.
Eigen::MatrixXd coda_reconstruct(const CodaFit &fit);

/// (total - mean) / sd within the year, population standard deviation.
Eigen::VectorXd standardized_weekly_deaths(const Eigen::VectorXd &totals);

} // namespace lilee
