#include "heteroseir/likelihood.hpp"

#include "heteroseir/integrate.hpp"
#include "heteroseir/rng.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

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

IncidenceDataset noise_free_dataset(const ModelParams& params, double i0, int horizon) {
    IncidenceDataset ds;
    const auto expected = expected_incidence(params, i0, horizon);
    for (const double v : expected) ds.counts.push_back(std::lround(v));
    ds.truth = params;
    ds.i0 = i0;
    return ds;
}

IncidenceDataset poisson_dataset(const ModelParams& params, double i0, int horizon,
                                 std::uint64_t seed) {
    Scenario sc;
    sc.params = params;
    sc.i0_focal = i0;
    sc.horizon = horizon;
    sc.n_replicates = 1;
    sc.rng_seed = seed;
    return generate_scenario(sc)[0][0];
}

}  // namespace

TEST_SUITE("likelihood") {

TEST_CASE("poisson_loglik closed-form oracle") {
    const std::vector<long> y0{0};
    const std::vector<double> l0{1.0};
    CHECK(poisson_loglik(y0, l0) == doctest::Approx(-1.0).epsilon(1e-14));

    // Direct pmf evaluation: log(2^2 e^-2 / 2!) = ln 2 - 2.
    const std::vector<long> y2{2};
    const std::vector<double> l2{2.0};
    const double oracle = 2.0 * std::log(2.0) - 2.0 - std::lgamma(3.0);
    CHECK(poisson_loglik(y2, l2) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(poisson_loglik(y2, l2) == doctest::Approx(std::log(2.0) - 2.0).epsilon(1e-14));
}

TEST_CASE("poisson_loglik is maximised at the sample mean") {
    const std::vector<long> y{3, 7, 4, 5, 6, 2, 8, 5};
    double mean = 0.0;
    for (const long v : y) mean += static_cast<double>(v);
    mean /= static_cast<double>(y.size());

    double best_lambda = 0.0, best = -1e300;
    for (double lambda = 0.5; lambda <= 12.0; lambda += 0.01) {
        const std::vector<double> expected(y.size(), lambda);
        const double ll = poisson_loglik(y, expected);
        if (ll > best) {
            best = ll;
            best_lambda = lambda;
        }
    }
    CHECK(best_lambda == doctest::Approx(mean).epsilon(0.01));
}

TEST_CASE("poisson_loglik zero-rate handling and errors") {
    const std::vector<long> zeros{0, 0};
    const std::vector<double> lam0{0.0, 0.0};
    CHECK(poisson_loglik(zeros, lam0) == 0.0);

    const std::vector<long> hit{1};
    const std::vector<double> zero{0.0};
    CHECK(poisson_loglik(hit, zero) == -std::numeric_limits<double>::infinity());

    const std::vector<long> y{1, 2};
    const std::vector<double> short_lam{1.0};
    CHECK_THROWS_AS(poisson_loglik(y, short_lam), std::invalid_argument);
    const std::vector<double> neg{1.0, -2.0};
    CHECK_THROWS_AS(poisson_loglik(y, neg), std::invalid_argument);
}

TEST_CASE("transforms: fixed points and round trips") {
    const FitSpec spec = FitSpec::heterogeneous_npi(truth_iib());
    const std::vector<double> vals{1.0, 1.0, 1.0, 0.5};
    const auto z = transform(vals, spec);
    CHECK(z[0] == 0.0);
    CHECK(z[3] == 0.0);

    RngStream rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::vector<double> natural{0.1 + 5.0 * rng.next_double(),
                                          0.01 + 3.0 * rng.next_double(),
                                          0.5 + 40.0 * rng.next_double(),
                                          0.01 + 0.98 * rng.next_double()};
        const auto round = untransform(transform(natural, spec), spec);
        for (size_t k = 0; k < natural.size(); ++k) {
            CHECK(std::abs(round[k] - natural[k]) < 1e-12 * std::max(1.0, natural[k]));
        }
    }

    const std::vector<double> at_zero{0.0, 1.0, 1.0, 0.5};
    CHECK_THROWS_AS(transform(at_zero, spec), std::domain_error);
    const std::vector<double> c1_boundary{1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(transform(c1_boundary, spec), std::domain_error);
}

TEST_CASE("aic arithmetic") {
    CHECK(aic(-400.0, 4) == 808.0);
    CHECK(aic(0.0, 0) == 0.0);
    CHECK_THROWS_AS(aic(1.0, -1), std::invalid_argument);
}

TEST_CASE("hessian_eigen on known matrices") {
    CHECK(hessian_eigen(Eigen::MatrixXd::Identity(3, 3)).condition_number ==
          doctest::Approx(1.0).epsilon(1e-12));

    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(2, 2);
    diag(0, 0) = 4.0;
    diag(1, 1) = 1.0;
    const HessianEigen eig = hessian_eigen(diag);
    CHECK(eig.eigenvalues[0] == doctest::Approx(4.0));
    CHECK(eig.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(eig.condition_number == doctest::Approx(4.0));

    // Reconstruction of a random symmetric matrix.
    RngStream rng(17);
    Eigen::MatrixXd m(4, 4);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) m(i, j) = rng.next_normal();
    }
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    const HessianEigen he = hessian_eigen(sym);
    Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(4, 4);
    for (int k = 0; k < 4; ++k) lambda(k, k) = he.eigenvalues[static_cast<size_t>(k)];
    const Eigen::MatrixXd rebuilt = he.eigenvectors * lambda * he.eigenvectors.transpose();
    CHECK((rebuilt - sym).norm() < 1e-8 * sym.norm());

    Eigen::MatrixXd indefinite = Eigen::MatrixXd::Identity(2, 2);
    indefinite(1, 1) = -0.5;
    CHECK_THROWS_AS(hessian_eigen(indefinite, true), std::runtime_error);
    CHECK_NOTHROW(hessian_eigen(indefinite, false));
}

TEST_CASE("correlation_from_hessian against an explicit 2x2 inverse") {
    const Eigen::MatrixXd diag = Eigen::Vector3d(2.0, 5.0, 9.0).asDiagonal();
    const Eigen::MatrixXd ident = correlation_from_hessian(diag);
    CHECK((ident - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);

    Eigen::MatrixXd h(2, 2);
    h << 2.0, -1.0, -1.0, 2.0;
    // By hand: inv = [[2,1],[1,2]]/3, so corr_01 = 1/2.
    const Eigen::MatrixXd corr = correlation_from_hessian(h);
    CHECK(corr(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(corr(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

    Eigen::MatrixXd singular = Eigen::MatrixXd::Ones(2, 2);
    CHECK_THROWS_AS(correlation_from_hessian(singular), std::runtime_error);
}

TEST_CASE("joint_loglik sums over epidemics") {
    const ModelParams truth = truth_iib();
    FitSpec spec = FitSpec::heterogeneous_npi(truth, {40.0});
    spec.fit_to = 60;
    const IncidenceDataset focal = poisson_dataset(truth, 40.0, 60, 1001);

    const std::vector<double> at_truth{3.0, 1.414, 15.0, 0.3};
    const double single = joint_loglik({focal}, at_truth, spec);

    // Oracle: direct evaluation through the expected-incidence path.
    const auto expected = expected_incidence(truth, 40.0, 60);
    CHECK(single == doctest::Approx(poisson_loglik(focal.counts, expected)).epsilon(1e-12));

    FitSpec pair_spec = FitSpec::heterogeneous_npi(truth, {40.0, 40.0});
    pair_spec.fit_to = 60;
    const double doubled = joint_loglik({focal, focal}, at_truth, pair_spec);
    CHECK(doubled == doctest::Approx(2.0 * single).epsilon(1e-12));

    // Truth should dominate a homogeneous-variance impostor on two-epidemic data.
    const IncidenceDataset aux = poisson_dataset(truth, 400.0, 60, 1002);
    FitSpec two = FitSpec::heterogeneous_npi(truth, {40.0, 400.0});
    two.fit_to = 60;
    const std::vector<double> wrong{3.0, 1e-6, 15.0, 0.3};
    CHECK(joint_loglik({focal, aux}, at_truth, two) > joint_loglik({focal, aux}, wrong, two));
}

TEST_CASE("noise-free self-consistency: generating parameters recovered") {
    const ModelParams truth = truth_iib();
    FitSpec spec = FitSpec::heterogeneous_npi(truth, {40.0});
    const IncidenceDataset ds = noise_free_dataset(truth, 40.0, 100);

    FitOptions opts;
    opts.rng_seed = 7;
    const FitResult fit = fit_mle({ds}, spec, opts);
    REQUIRE(fit.converged);
    CHECK(std::abs(fit.mle_of(ParamId::R0) - 3.0) / 3.0 < 0.01);
    CHECK(std::abs(fit.mle_of(ParamId::Nu) - 1.414) / 1.414 < 0.01);
    CHECK(std::abs(fit.mle_of(ParamId::C1) - 0.3) / 0.3 < 0.01);
    CHECK(std::abs(fit.mle_of(ParamId::T0) - 15.0) < 0.5);

    // Diagnostics contract.
    CHECK(fit.aic == doctest::Approx(2.0 * 4 - 2.0 * fit.loglik).epsilon(1e-14));
    REQUIRE(fit.correlation.rows() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(fit.correlation(i, i) == doctest::Approx(1.0).epsilon(1e-8));
        for (int j = 0; j < 4; ++j) {
            CHECK(fit.correlation(i, j) == doctest::Approx(fit.correlation(j, i)).epsilon(1e-8));
            CHECK(std::abs(fit.correlation(i, j)) <= 1.0 + 1e-8);
        }
    }
    CHECK(fit.condition_number >= 1.0);
    CHECK(fit.hessian_pd);

    // Raw finite-difference symmetry before symmetrisation.
    double max_h = 0.0, max_asym = 0.0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            max_h = std::max(max_h, std::abs(fit.hessian(i, j)));
            max_asym = std::max(max_asym, std::abs(fit.hessian(i, j) - fit.hessian(j, i)));
        }
    }
    CHECK(max_asym / max_h < 1e-4);

    // Wald interval for c1 stays inside the unit interval.
    const int c1_idx = fit.index_of(ParamId::C1);
    CHECK(fit.wald_ci[static_cast<size_t>(c1_idx)].lower > 0.0);
    CHECK(fit.wald_ci[static_cast<size_t>(c1_idx)].upper < 1.0);
}

TEST_CASE("nested specs order the maximised loglik") {
    const ModelParams truth = truth_iib();
    const IncidenceDataset ds = poisson_dataset(truth, 40.0, 100, 2024);

    FitOptions opts;
    opts.rng_seed = 3;
    opts.compute_hessian = false;
    const FitResult het_npi = fit_mle({ds}, FitSpec::heterogeneous_npi(truth, {40.0}), opts);
    const FitResult hom_npi = fit_mle({ds}, FitSpec::homogeneous_npi(truth, {40.0}), opts);
    const FitResult hom_flat = fit_mle({ds}, FitSpec::homogeneous_no_npi(truth, {40.0}), opts);

    REQUIRE(het_npi.converged);
    REQUIRE(hom_npi.converged);
    REQUIRE(hom_flat.converged);
    CHECK(het_npi.loglik >= hom_npi.loglik - 1e-4);
    CHECK(hom_npi.loglik >= hom_flat.loglik - 1e-4);
}

TEST_CASE("fit spec validation") {
    FitSpec bad = FitSpec::heterogeneous_npi(truth_iib());
    bad.free_params = {ParamId::R0, ParamId::T0};  // t0 without c1
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    FitSpec wrong_window = FitSpec::homogeneous_no_npi(truth_iib());
    wrong_window.fit_from = 0;
    CHECK_THROWS_AS(wrong_window.validate(), std::invalid_argument);

    FitSpec too_many = FitSpec::homogeneous_no_npi(truth_iib());
    too_many.i0_per_epidemic = {40.0, 400.0, 80.0};
    CHECK_THROWS_AS(too_many.validate(), std::invalid_argument);
}

TEST_CASE("fit result JSON is parseable with the documented keys") {
    const ModelParams truth = truth_iib();
    FitSpec spec = FitSpec::heterogeneous_no_npi(truth, {40.0});
    spec.fit_to = 50;
    ModelParams flat = truth;
    flat.npi.c1 = 1.0;
    const IncidenceDataset ds = poisson_dataset(flat, 40.0, 50, 31);
    FitOptions opts;
    opts.rng_seed = 5;
    const FitResult fit = fit_mle({ds}, spec, opts);

    const auto j = nlohmann::json::parse(fit_result_json(fit));
    CHECK(j.contains("mle"));
    CHECK(j.contains("loglik"));
    CHECK(j.contains("aic"));
    CHECK(j.contains("wald_ci"));
    CHECK(j.contains("correlation"));
    CHECK(j.contains("eigenvalues"));
    CHECK(j.contains("condition_number"));
    CHECK(j.contains("converged"));
    CHECK(j.at("spec").at("free_params").size() == 2);
    CHECK(j.at("mle").contains("r0"));
}

}  // TEST_SUITE
