#include "lilee/coda.hpp"
#include "lilee/error.hpp"

#include <doctest.h>

#include <random>

using namespace lilee;

TEST_CASE("identical weekly compositions are degenerate") {
    Eigen::MatrixXd d(4, 52);
    for (int w = 0; w < 52; ++w) d.col(w) << 10, 20, 30, 40;
    CodaOptions raw;
    raw.perturb = false;
    const CodaFit fit = coda_fit(d, {80, 83}, 2020, Gender::Male, raw);
    CHECK(fit.degenerate);
    CHECK(fit.kappa.cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::abs(fit.beta.norm() - 1.0) < 1e-12);
}

TEST_CASE("a rank-one composition is recovered exactly") {
    const int nx = 6, nw = 52;
    Eigen::VectorXd alpha(nx), beta(nx), kappa(nw);
    alpha << -1.0, -0.5, 0.0, 0.2, 0.5, 0.8;
    alpha.array() -= alpha.mean();
    beta << -0.5, -0.3, -0.1, 0.1, 0.3, 0.5;
    beta.normalize();
    for (int w = 0; w < nw; ++w) kappa(w) = std::sin(2.0 * M_PI * w / nw);
    kappa.array() -= kappa.mean();
    Eigen::MatrixXd d(nx, nw);
    for (int w = 0; w < nw; ++w) {
        const Eigen::VectorXd parts = (alpha + kappa(w) * beta).array().exp();
        d.col(w) = 1000.0 * parts / parts.sum();
    }
    CodaOptions raw;
    raw.perturb = false;
    const CodaFit fit = coda_fit(d, {75, 80}, 2021, Gender::Female, raw);
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.explained_variance == doctest::Approx(1.0).epsilon(1e-10));
    CHECK((fit.beta - beta).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((fit.kappa - kappa).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((fit.alpha - alpha).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(fit.kappa.sum()) < 1e-10);
    const Eigen::MatrixXd comp = coda_reconstruct(fit);
    const Eigen::MatrixXd observed = d.transpose() / 1000.0;
    CHECK((comp - observed).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fits on noisy data keep their constraints") {
    std::mt19937_64 rng(8);
    std::poisson_distribution<int> pois(200);
    Eigen::MatrixXd d(21, 53);
    for (auto &v : d.reshaped()) v = pois(rng);
    const CodaFit fit = coda_fit(d, {80, 100}, 2020, Gender::Male);
    CHECK(std::abs(fit.beta.norm() - 1.0) < 1e-12);
    CHECK(std::abs(fit.kappa.sum()) < 1e-9);
    CHECK(std::abs(fit.beta.sum()) < 1e-9);
    CHECK(std::abs(fit.alpha.sum()) < 1e-12);
    CHECK(fit.explained_variance > 0.0);
    CHECK(fit.explained_variance <= 1.0);
}

TEST_CASE("zero counts need the perturbation") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Constant(3, 10, 5.0);
    d(1, 4) = 0.0;
    CodaOptions raw;
    raw.perturb = false;
    CHECK_THROWS_AS(coda_fit(d, {0, 2}, 2020, Gender::Male, raw), DataError);
    CHECK_NOTHROW(coda_fit(d, {0, 2}, 2020, Gender::Male));
    CHECK_THROWS_AS(coda_fit(d, {0, 3}, 2020, Gender::Male), DataError);
}

TEST_CASE("clr rows sum to zero") {
    Eigen::MatrixXd p(2, 3);
    p << 0.2, 0.3, 0.5, 1, 2, 4;
    const Eigen::MatrixXd c = clr_rows(p);
    CHECK(c.rowwise().sum().cwiseAbs().maxCoeff() < 1e-15);
    CHECK(c(1, 2) - c(1, 1) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("standardized weekly deaths") {
    const Eigen::Vector3d z = standardized_weekly_deaths(Eigen::Vector3d(10, 20, 30));
    CHECK(z(0) == doctest::Approx(-std::sqrt(1.5)));
    CHECK(z(1) == doctest::Approx(0.0));
    CHECK(z(2) == doctest::Approx(std::sqrt(1.5)));
    CHECK_THROWS_AS(standardized_weekly_deaths(Eigen::Vector3d(5, 5, 5)), DataError);
    Eigen::VectorXd r = Eigen::VectorXd::Random(52).array() + 3.0;
    const Eigen::VectorXd zr = standardized_weekly_deaths(r);
    CHECK(std::abs(zr.mean()) < 1e-14);
    CHECK(std::sqrt(zr.array().square().mean()) == doctest::Approx(1.0));
}
