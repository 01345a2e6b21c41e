#include "heteroseir/prediction.hpp"

#include "heteroseir/integrate.hpp"

#include <doctest.h>

#include <cmath>

using namespace heteroseir;

namespace {

ModelParams truth_iib() {
    ModelParams p;
    p.r0 = 3.0;
    p.nu = 1.414;
    p.npi = NpiSchedule{15.0, 20.0, 0.3};
    return p;
}

// Synthetic fit with a chosen transformed-scale covariance; keeps the MVN
// sampler contract testable without running an optimisation.
FitResult synthetic_fit(const Eigen::MatrixXd& cov_z) {
    FitResult fit;
    fit.spec = FitSpec::heterogeneous_npi(truth_iib(), {40.0});
    fit.mle = {3.0, 1.414, 15.0, 0.3};
    fit.loglik = -400.0;
    fit.converged = true;
    fit.hessian_pd = true;
    fit.covariance_z = cov_z;
    fit.hessian = cov_z.norm() > 0.0 ? Eigen::MatrixXd(cov_z.inverse())
                                     : Eigen::MatrixXd(Eigen::MatrixXd::Zero(4, 4));
    if (cov_z.norm() > 0.0) {
        fit.correlation = Eigen::MatrixXd(4, 4);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                fit.correlation(i, j) = cov_z(i, j) / std::sqrt(cov_z(i, i) * cov_z(j, j));
            }
        }
    }
    return fit;
}

double sample_corr(const std::vector<double>& a, const std::vector<double>& b) {
    const size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (size_t k = 0; k < n; ++k) {
        ma += a[k];
        mb += b[k];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (size_t k = 0; k < n; ++k) {
        sab += (a[k] - ma) * (b[k] - mb);
        saa += (a[k] - ma) * (a[k] - ma);
        sbb += (b[k] - mb) * (b[k] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_SUITE("prediction") {

TEST_CASE("zero covariance collapses every draw onto the MLE") {
    const FitResult fit = synthetic_fit(Eigen::MatrixXd::Zero(4, 4));
    RngStream rng(1);
    const auto draws = sample_parameters(fit, 50, rng);
    REQUIRE(draws.size() == 50);
    for (const auto& d : draws) {
        CHECK(d == fit.mle);
    }
}

TEST_CASE("diagonal covariance draws are uncorrelated and in-domain") {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
    cov.diagonal() << 0.01, 0.04, 0.01, 0.09;
    const FitResult fit = synthetic_fit(cov);
    RngStream rng(22);
    const auto draws = sample_parameters(fit, 10000, rng);

    std::vector<std::vector<double>> z(4, std::vector<double>(draws.size()));
    for (size_t d = 0; d < draws.size(); ++d) {
        CHECK(draws[d][1] > 0.0);            // nu stays positive
        CHECK(draws[d][3] > 0.0);            // c1 stays inside (0, 1)
        CHECK(draws[d][3] < 1.0);
        const auto zz = transform(draws[d], fit.spec);
        for (size_t k = 0; k < 4; ++k) z[k][d] = zz[k];
    }
    for (size_t i = 0; i < 4; ++i) {
        for (size_t j = i + 1; j < 4; ++j) {
            CHECK(std::abs(sample_corr(z[i], z[j])) < 0.05);
        }
    }
}

TEST_CASE("sampler reproduces the fit correlation matrix") {
    Eigen::MatrixXd cov(4, 4);
    cov << 0.010, 0.006, 0.001, 0.004,
           0.006, 0.040, 0.002, 0.030,
           0.001, 0.002, 0.020, 0.001,
           0.004, 0.030, 0.001, 0.050;
    const FitResult fit = synthetic_fit(cov);
    RngStream rng(33);
    const auto draws = sample_parameters(fit, 10000, rng);

    std::vector<std::vector<double>> z(4, std::vector<double>(draws.size()));
    for (size_t d = 0; d < draws.size(); ++d) {
        const auto zz = transform(draws[d], fit.spec);
        for (size_t k = 0; k < 4; ++k) z[k][d] = zz[k];
    }
    for (size_t i = 0; i < 4; ++i) {
        for (size_t j = 0; j < 4; ++j) {
            if (i == j) continue;
            CHECK(std::abs(sample_corr(z[i], z[j]) - fit.correlation(static_cast<Eigen::Index>(i),
                                                                     static_cast<Eigen::Index>(j))) <
                  0.05);
        }
    }
}

TEST_CASE("non-positive-definite covariance raises with the smallest eigenvalue") {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(4, 4);
    cov(0, 0) = -1.0;
    const FitResult fit = synthetic_fit(cov);
    RngStream rng(3);
    CHECK_THROWS_WITH_AS(sample_parameters(fit, 10, rng),
                         doctest::Contains("smallest eigenvalue"), std::runtime_error);
}

TEST_CASE("zero-covariance forecast collapses to the MLE trajectory") {
    const FitResult fit = synthetic_fit(Eigen::MatrixXd::Zero(4, 4));
    RngStream rng(4);
    const ForecastBands bands = forecast(fit, 40.0, 100, 150, 100, rng);
    const auto mle_curve =
        forecast_trajectory(fit.spec.apply(fit.mle), 40.0, 150, 100.0);
    REQUIRE(bands.median.size() == mle_curve.size());
    for (size_t t = 0; t < bands.median.size(); ++t) {
        CHECK(bands.lower[t] == doctest::Approx(mle_curve[t]).epsilon(1e-12));
        CHECK(bands.median[t] == doctest::Approx(mle_curve[t]).epsilon(1e-12));
        CHECK(bands.upper[t] == doctest::Approx(mle_curve[t]).epsilon(1e-12));
    }
}

TEST_CASE("bands are ordered, non-negative, and bracket the MLE trajectory") {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
    cov.diagonal() << 1e-4, 4e-4, 1e-4, 4e-4;
    const FitResult fit = synthetic_fit(cov);
    RngStream rng(5);
    const ForecastBands bands = forecast(fit, 40.0, 100, 200, 400, rng);

    const auto mle_curve = forecast_trajectory(fit.spec.apply(fit.mle), 40.0, 200, 100.0);
    int inside = 0, total = 0;
    for (size_t t = 0; t < bands.median.size(); ++t) {
        CHECK(bands.lower[t] <= bands.median[t] + 1e-12);
        CHECK(bands.median[t] <= bands.upper[t] + 1e-12);
        CHECK(bands.lower[t] >= 0.0);
        if (bands.times[t] > 100.0) {
            ++total;
            if (mle_curve[t] >= bands.lower[t] && mle_curve[t] <= bands.upper[t]) ++inside;
        }
    }
    CHECK(inside >= static_cast<int>(0.95 * total));
}

TEST_CASE("NPI lift at the fit boundary creates the second wave") {
    const ModelParams p = truth_iib();
    const auto lifted = forecast_trajectory(p, 40.0, 250, 100.0);
    const auto persistent = forecast_trajectory(p, 40.0, 250, std::nullopt);

    // Identical through the fitting window.
    for (int t = 0; t <= 100; ++t) CHECK(lifted[static_cast<size_t>(t)] ==
                                         doctest::Approx(persistent[static_cast<size_t>(t)]).epsilon(1e-12));

    double peak_lifted = 0.0, peak_persistent = 0.0;
    for (size_t t = 101; t < lifted.size(); ++t) {
        peak_lifted = std::max(peak_lifted, lifted[t]);
        peak_persistent = std::max(peak_persistent, persistent[t]);
    }
    CHECK(peak_lifted > 100.0);      // resurgence
    CHECK(peak_persistent < 10.0);   // monotone decay under a persistent NPI
}

TEST_CASE("quantile bands are stable in the number of draws") {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
    cov.diagonal() << 4e-4, 1e-3, 4e-4, 1e-3;
    const FitResult fit = synthetic_fit(cov);
    RngStream rng_a(6), rng_b(7);
    const ForecastBands small = forecast(fit, 40.0, 100, 250, 2000, rng_a);
    const ForecastBands large = forecast(fit, 40.0, 100, 250, 10000, rng_b);

    size_t peak_day = 101;
    for (size_t t = 101; t < large.median.size(); ++t) {
        if (large.median[t] > large.median[peak_day]) peak_day = t;
    }
    CHECK(std::abs(small.median[peak_day] - large.median[peak_day]) / large.median[peak_day] < 0.1);
    CHECK(std::abs(small.lower[peak_day] - large.lower[peak_day]) /
              std::max(large.lower[peak_day], 1.0) < 0.1);
    CHECK(std::abs(small.upper[peak_day] - large.upper[peak_day]) /
              std::max(large.upper[peak_day], 1.0) < 0.1);
}

}  // TEST_SUITE
