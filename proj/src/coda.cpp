#include "lilee/coda.hpp"

#include "lilee/error.hpp"

#include <fmt/format.h>

#include <cmath>

namespace lilee {

Eigen::MatrixXd clr_rows(const Eigen::MatrixXd &positive) {
    if ((positive.array() <= 0.0).any()) throw DataError("clr transform needs strictly positive parts");
    Eigen::MatrixXd logs = positive.array().log().matrix();
    const Eigen::VectorXd means = logs.rowwise().mean();
    logs.colwise() -= means;
    return logs;
}

CodaFit coda_fit(const Eigen::MatrixXd &deaths, IntRange ages, int year, Gender gender, const CodaOptions &options) {
    if (deaths.rows() != ages.size())
        throw DataError(fmt::format("{} death rows for ages {}", deaths.rows(), format_range(ages)));
    if (deaths.cols() < 2 || ages.size() < 2) throw DataError("compositional fit needs at least two weeks and ages");
    if (!deaths.allFinite()) throw DataError("non-finite deaths in compositional fit");
    if ((deaths.array() < 0.0).any()) throw DataError("negative deaths in compositional fit");

    // Rows are weeks, columns ages.
    Eigen::MatrixXd counts = deaths.transpose();
    if (options.perturb) counts.array() += 1.0;
    const Eigen::VectorXd totals = counts.rowwise().sum();
    const Eigen::MatrixXd composition = totals.asDiagonal().inverse() * counts;
    const Eigen::MatrixXd clr = clr_rows(composition);

    CodaFit fit;
    fit.year = year;
    fit.gender = gender;
    fit.ages = ages;
    fit.alpha = clr.colwise().mean().transpose();
    const Eigen::MatrixXd centred = clr.rowwise() - fit.alpha.transpose();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sigma = svd.singularValues();
    const double energy = sigma.squaredNorm();
    const double tiny = 1e-13 * std::sqrt(static_cast<double>(centred.size()));
    if (sigma.size() == 0 || sigma(0) <= tiny) {
        fit.degenerate = true;
        fit.explained_variance = 0.0;
        fit.kappa = Eigen::VectorXd::Zero(centred.rows());
        fit.beta = Eigen::VectorXd::LinSpaced(ages.size(), ages.first, ages.last);
        fit.beta.array() -= fit.beta.mean();
        fit.beta.normalize();
        return fit;
    }
    fit.beta = svd.matrixV().col(0);
    fit.kappa = sigma(0) * svd.matrixU().col(0);
    fit.explained_variance = sigma(0) * sigma(0) / energy;

    const int anchor = std::min(80, ages.last);
    const double old_age_weight = fit.beta.tail(ages.last - anchor + 1).sum();
    if (old_age_weight < 0.0) {
        fit.beta = -fit.beta;
        fit.kappa = -fit.kappa;
    }
    return fit;
}

Eigen::MatrixXd coda_reconstruct(const CodaFit &fit) {
    Eigen::MatrixXd logs = fit.kappa * fit.beta.transpose();
    logs.rowwise() += fit.alpha.transpose();
    Eigen::MatrixXd parts = logs.array().exp().matrix();
    const Eigen::VectorXd totals = parts.rowwise().sum();
    return totals.asDiagonal().inverse() * parts;
}

Eigen::VectorXd standardized_weekly_deaths(const Eigen::VectorXd &totals) {
    if (totals.size() < 2) throw DataError("standardization needs at least two weeks");
    const double mean = totals.mean();
    const double var = (totals.array() - mean).square().mean();
    if (!(var > 0.0)) throw DataError("weekly totals have zero variance");
    return ((totals.array() - mean) / std::sqrt(var)).matrix();
}

} // namespace lilee
