#include "heteroseir/model.hpp"
#include "heteroseir/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace heteroseir;

namespace {

ModelParams table1_params(double r0 = 3.0, double nu = 0.0, double c1 = 1.0) {
    ModelParams p;
    p.r0 = r0;
    p.nu = nu;
    p.npi = NpiSchedule{15.0, 20.0, c1};
    return p;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("npi_factor piecewise values") {
    const NpiSchedule npi{15.0, 20.0, 0.3};
    CHECK(npi_factor(10.0, npi) == 1.0);
    CHECK(npi_factor(17.5, npi) == doctest::Approx(0.65).epsilon(1e-12));
    CHECK(npi_factor(100.0, npi) == 0.3);
    CHECK(npi_factor(15.0, npi) == 1.0);   // boundary belongs to the flat part
    CHECK(npi_factor(20.0, npi) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("npi_factor step when t0 == t1 and when t0 > t1") {
    const NpiSchedule step{15.0, 15.0, 0.4};
    CHECK(npi_factor(15.0, step) == 1.0);
    CHECK(npi_factor(15.0 + 1e-9, step) == 0.4);
    const NpiSchedule crossed{28.5, 20.0, 0.4};  // optimizer-explored region
    CHECK(npi_factor(25.0, crossed) == 1.0);
    CHECK(npi_factor(28.6, crossed) == 0.4);
}

TEST_CASE("npi_factor is non-increasing and bounded in [c1, 1]") {
    RngStream rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const double t0 = rng.next_double() * 30.0;
        const NpiSchedule npi{t0, t0 + rng.next_double() * 20.0, rng.next_double()};
        double prev = 2.0;
        for (double t = 0.0; t <= 60.0; t += 0.25) {
            const double c = npi_factor(t, npi);
            CHECK(c <= prev + 1e-15);
            CHECK(c >= npi.c1 - 1e-15);
            CHECK(c <= 1.0);
            prev = c;
        }
    }
}

TEST_CASE("npi_factor with c1 = 1 is identically 1") {
    const NpiSchedule npi{15.0, 20.0, 1.0};
    for (double t = 0.0; t <= 50.0; t += 0.5) CHECK(npi_factor(t, npi) == 1.0);
}

TEST_CASE("beta_from_r0 against direct arithmetic") {
    // Oracle: substitute into the defining relation by hand.
    const double oracle = 3.0 / (0.5 * 5.5 + 4.0);
    CHECK(beta_from_r0(3.0, 0.5, 1.0 / 5.5, 0.25) == doctest::Approx(oracle).epsilon(1e-15));
    CHECK(beta_from_r0(0.0, 0.5, 1.0 / 5.5, 0.25) == 0.0);
    CHECK(beta_from_r0(3.0, 0.0, 1.0 / 5.5, 0.25) == doctest::Approx(3.0 * 0.25).epsilon(1e-15));
}

TEST_CASE("reduced_rhs vanishes without infectious pressure") {
    const ModelParams p = table1_params(3.0, 1.414);
    EpidemicState st{p.n_pop, 0.0, 0.0, 0.0, 5.0};
    const StateDeriv d = reduced_rhs(st, p);
    CHECK(d.ds == 0.0);
    CHECK(d.de == 0.0);
    CHECK(d.di == 0.0);
    CHECK(d.dr == 0.0);
}

TEST_CASE("reduced_rhs with nu = 0 equals the classical SEIR term") {
    const ModelParams p = table1_params(3.0, 0.0, 0.5);
    EpidemicState st{70000.0, 300.0, 120.0, 29580.0, 30.0};
    const StateDeriv d = reduced_rhs(st, p);
    const double c = npi_factor(30.0, p.npi);
    const double expected = -c * p.beta() * (p.rho * st.e + st.i) * st.s / p.n_pop;
    CHECK(d.ds == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("reduced_rhs matches a hand evaluation of the depletion term") {
    // Independent scalar evaluation of the susceptible drain, outside the
    // production code path.
    const ModelParams p = table1_params(3.0, 1.414);
    EpidemicState st{50000.0, 100.0, 40.0, 49860.0, 5.0};
    const double beta = 3.0 / (0.5 * 5.5 + 4.0);
    const double drain = -1.0 * beta * (0.5 * 100.0 + 40.0) *
                         std::pow(50000.0 / 100000.0, 1.0 + 1.414 * 1.414);
    const StateDeriv d = reduced_rhs(st, p);
    CHECK(d.ds == doctest::Approx(drain).epsilon(1e-13));
    CHECK(d.de == doctest::Approx(-drain - p.delta * st.e).epsilon(1e-13));
    CHECK(d.di == doctest::Approx(p.delta * st.e - p.gamma * st.i).epsilon(1e-13));
    CHECK(d.dr == doctest::Approx(p.gamma * st.i).epsilon(1e-13));
}

TEST_CASE("reduced_rhs components cancel to below 1e-12 N per day") {
    const ModelParams p = table1_params(3.0, 1.414, 0.3);
    RngStream rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const double s = rng.next_double() * p.n_pop;
        const double e = rng.next_double() * 0.1 * p.n_pop;
        const double i = rng.next_double() * 0.1 * p.n_pop;
        EpidemicState st{s, e, i, std::max(p.n_pop - s - e - i, 0.0), rng.next_double() * 100.0};
        const StateDeriv d = reduced_rhs(st, p);
        CHECK(std::abs(d.ds + d.de + d.di + d.dr) < 1e-12 * p.n_pop);
    }
}

TEST_CASE("reduced_rhs clamps a negative S inside the power term") {
    const ModelParams p = table1_params(3.0, 1.414);
    EpidemicState st{-1e-9, 50.0, 20.0, 100000.0, 10.0};
    const StateDeriv d = reduced_rhs(st, p);
    CHECK(d.ds == 0.0);
    CHECK(std::isfinite(d.de));
}

TEST_CASE("initial_state seeds E:I at 2.5:1") {
    const ModelParams p = table1_params();
    const EpidemicState a = initial_state(40.0, p);
    CHECK(a.s == 99860.0);
    CHECK(a.e == 100.0);
    CHECK(a.i == 40.0);
    CHECK(a.r == 0.0);
    CHECK(a.t == 0.0);
    CHECK(a.total() == p.n_pop);

    const EpidemicState b = initial_state(400.0, p);
    CHECK(b.s == 98600.0);
    CHECK(b.e == 1000.0);
    CHECK(b.i == 400.0);

    const EpidemicState zero = initial_state(0.0, p);
    CHECK(zero.s == p.n_pop);
    CHECK(zero.e == 0.0);
    CHECK(zero.i == 0.0);

    CHECK_THROWS_AS(initial_state(-1.0, p), std::invalid_argument);
    CHECK_THROWS_AS(initial_state(p.n_pop / 3.0, p), std::invalid_argument);
}

TEST_CASE("gamma grid reproduces mean 1 and CV nu") {
    for (const double nu : {0.5, 1.0, 1.414}) {
        const SusceptibilityGrid grid = gamma_susceptibility_grid(nu, 400, 99860.0);
        CHECK(std::abs(grid.weight_sum() - 1.0) < 1e-10);
        CHECK(std::abs(grid.mean_x() - 1.0) < 1e-6);
        CHECK(std::abs(grid.cv_x() - nu) < 1e-3);
        CHECK(grid.total_susceptible() == doctest::Approx(99860.0).epsilon(1e-12));
        for (const auto& node : grid.nodes) {
            CHECK(node.x > 0.0);
            CHECK(node.weight >= 0.0);
        }
    }
}

TEST_CASE("gamma grid with nu = 0 degenerates to a single node") {
    const SusceptibilityGrid grid = gamma_susceptibility_grid(0.0, 400, 500.0);
    REQUIRE(grid.nodes.size() == 1);
    CHECK(grid.nodes[0].x == 1.0);
    CHECK(grid.nodes[0].weight == 1.0);
    CHECK(grid.nodes[0].s_density == 500.0);
}

TEST_CASE("explicit_rhs on a single x = 1 node equals the homogeneous reduced system") {
    const ModelParams p = table1_params(3.0, 0.0, 0.4);
    SusceptibilityGrid grid = gamma_susceptibility_grid(0.0, 1, 70000.0);
    const double e = 300.0, i = 120.0, t = 30.0;
    const ExplicitDeriv xd = explicit_rhs(grid, e, i, p, t);
    const StateDeriv rd = reduced_rhs(EpidemicState{70000.0, e, i, p.n_pop - 70000.0 - e - i, t}, p);
    CHECK(xd.d_density[0] == doctest::Approx(rd.ds).epsilon(1e-13));
    CHECK(xd.de == doctest::Approx(rd.de).epsilon(1e-13));
    CHECK(xd.di == doctest::Approx(rd.di).epsilon(1e-13));
}

TEST_CASE("explicit_rhs vanishes with no infection pressure") {
    const ModelParams p = table1_params(3.0, 1.0);
    const SusceptibilityGrid grid = gamma_susceptibility_grid(1.0, 50, 99860.0);
    const ExplicitDeriv d = explicit_rhs(grid, 0.0, 0.0, p, 3.0);
    for (const double v : d.d_density) CHECK(v == 0.0);
    CHECK(d.de == 0.0);
    CHECK(d.di == 0.0);
}

TEST_CASE("linear_eigen satisfies the characteristic equation") {
    const ModelParams p = table1_params(3.0);
    const LinearEigen eig = linear_eigen(p);
    const double a11 = p.rho * p.beta() - p.delta;
    const double a12 = p.beta();
    const double a21 = p.delta;
    const double a22 = -p.gamma;
    for (const double lambda : {eig.lambda_plus, eig.lambda_minus}) {
        const double det = (a11 - lambda) * (a22 - lambda) - a12 * a21;
        CHECK(std::abs(det) < 1e-10);
    }
    CHECK(eig.lambda_plus > 0.0);
    CHECK(eig.lambda_minus < 0.0);
    // Early growth rate and dominant-eigenvector composition at Table 1 rates.
    CHECK(eig.lambda_plus == doctest::Approx(0.2).epsilon(0.10));
    CHECK(eig.e_over_i == doctest::Approx(2.55).epsilon(0.04));
    // The eigenvector ratio solves the I-row of the eigen equation.
    CHECK(a21 * eig.e_over_i + a22 == doctest::Approx(eig.lambda_plus).epsilon(1e-12));
}

TEST_CASE("linear_eigen with beta = 0 gives the decay rates") {
    ModelParams p = table1_params(0.0);
    const LinearEigen eig = linear_eigen(p);
    CHECK(eig.lambda_plus == doctest::Approx(-std::min(p.delta, p.gamma)).epsilon(1e-12));
    CHECK(eig.lambda_minus == doctest::Approx(-std::max(p.delta, p.gamma)).epsilon(1e-12));
}

TEST_CASE("validation rejects out-of-domain parameters") {
    ModelParams p = table1_params();
    CHECK_NOTHROW(p.validate());
    p.nu = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = table1_params();
    p.delta = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    NpiSchedule bad{20.0, 15.0, 0.5};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    NpiSchedule bad2{5.0, 10.0, 1.5};
    CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
}

}  // TEST_SUITE
