#include "heteroseir/integrate.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace heteroseir;

namespace {

ModelParams make_params(double r0, double nu, double c1) {
    ModelParams p;
    p.r0 = r0;
    p.nu = nu;
    p.npi = NpiSchedule{15.0, 20.0, c1};
    return p;
}

}  // namespace

TEST_SUITE("integrate") {

TEST_CASE("disease-free initial state stays at equilibrium") {
    const ModelParams p = make_params(3.0, 1.414, 0.3);
    const Trajectory traj = integrate(p, initial_state(0.0, p), 50);
    for (size_t k = 0; k < traj.times.size(); ++k) {
        CHECK(traj.states[k].s == p.n_pop);
        CHECK(traj.incidence[k] == 0.0);
    }
}

TEST_CASE("final attack rates bracket the homogeneous and heterogeneous limits") {
    const ModelParams hom = make_params(3.0, 0.0, 1.0);
    const Trajectory t0 = integrate(hom, initial_state(40.0, hom), 300);
    const double attack_hom = t0.states.back().r / hom.n_pop;
    CHECK(attack_hom > 0.85);
    CHECK(attack_hom < 0.95);

    const ModelParams het = make_params(3.0, 1.414, 1.0);
    const Trajectory t1 = integrate(het, initial_state(40.0, het), 300);
    const double attack_het = t1.states.back().r / het.n_pop;
    CHECK(attack_het > 0.45);
    CHECK(attack_het < 0.55);
}

TEST_CASE("attack rate decreases monotonically in nu") {
    double prev = 1.0;
    for (const double nu : {0.0, 0.5, 1.0, 1.414}) {
        const ModelParams p = make_params(3.0, nu, 1.0);
        const Trajectory traj = integrate(p, initial_state(40.0, p), 300);
        const double attack = traj.states.back().r / p.n_pop;
        CHECK(attack < prev);
        prev = attack;
    }
}

TEST_CASE("population is conserved along the trajectory") {
    const ModelParams p = make_params(3.0, 1.414, 0.3);
    const Trajectory traj = integrate(p, initial_state(40.0, p), 300);
    for (const auto& st : traj.states) {
        CHECK(std::abs(st.total() - p.n_pop) / p.n_pop < 1e-8);
    }
}

TEST_CASE("S non-increasing and R non-decreasing") {
    const ModelParams p = make_params(3.0, 1.0, 0.3);
    const Trajectory traj = integrate(p, initial_state(40.0, p), 200);
    for (size_t k = 1; k < traj.states.size(); ++k) {
        CHECK(traj.states[k].s <= traj.states[k - 1].s + 1e-9);
        CHECK(traj.states[k].r >= traj.states[k - 1].r - 1e-9);
    }
}

TEST_CASE("incidence is definitionally delta * E") {
    const ModelParams p = make_params(3.0, 1.414, 0.3);
    const Trajectory traj = integrate(p, initial_state(40.0, p), 100);
    for (size_t k = 0; k < traj.states.size(); ++k) {
        CHECK(traj.incidence[k] == p.delta * traj.states[k].e);
    }
}

TEST_CASE("step halving moves every daily incidence by less than 1e-6 relative") {
    for (const double c1 : {1.0, 0.3}) {
        const ModelParams p = make_params(3.0, 1.414, c1);
        const Trajectory coarse = integrate(p, initial_state(40.0, p), 150, 0.05);
        const Trajectory fine = integrate(p, initial_state(40.0, p), 150, 0.025);
        for (size_t k = 0; k < coarse.incidence.size(); ++k) {
            const double denom = std::max({std::abs(coarse.incidence[k]),
                                           std::abs(fine.incidence[k]), 1e-30});
            CHECK(std::abs(coarse.incidence[k] - fine.incidence[k]) / denom < 1e-6);
        }
    }
}

TEST_CASE("c1 = 1 schedules integrate bitwise-identically to the no-NPI schedule") {
    ModelParams a = make_params(3.0, 1.0, 1.0);
    ModelParams b = a;
    b.npi = NpiSchedule::none();
    const Trajectory ta = integrate(a, initial_state(40.0, a), 120);
    const Trajectory tb = integrate(b, initial_state(40.0, b), 120);
    for (size_t k = 0; k < ta.states.size(); ++k) {
        CHECK(ta.states[k].s == tb.states[k].s);
        CHECK(ta.states[k].e == tb.states[k].e);
        CHECK(ta.states[k].i == tb.states[k].i);
        CHECK(ta.states[k].r == tb.states[k].r);
    }
}

TEST_CASE("explicit gamma-grid system matches the reduced system") {
    for (const double nu : {0.5, 1.0, 1.414}) {
        const ModelParams p = make_params(3.0, nu, 1.0);
        const Trajectory reduced = integrate(p, initial_state(40.0, p), 300);
        const Trajectory explicit_traj = integrate_explicit(p, 40.0, 300, 400);
        const double attack_reduced = reduced.states.back().r / p.n_pop;
        const double attack_explicit = explicit_traj.states.back().r / p.n_pop;
        CHECK(std::abs(attack_explicit - attack_reduced) / attack_reduced < 0.005);
    }
}

TEST_CASE("incidence_series slices and validates") {
    const ModelParams p = make_params(3.0, 0.5, 0.3);
    const Trajectory traj = integrate(p, initial_state(40.0, p), 60);

    const auto full = incidence_series(traj, 0, 60);
    REQUIRE(full.size() == traj.incidence.size());
    for (size_t k = 0; k < full.size(); ++k) CHECK(full[k] == traj.incidence[k]);

    const auto window = incidence_series(traj, 1, 30);
    REQUIRE(window.size() == 30);
    CHECK(window[0] == traj.incidence[1]);
    CHECK(window.back() == traj.incidence[30]);
    for (const double v : window) CHECK(v >= 0.0);

    CHECK_THROWS_AS(incidence_series(traj, -1, 10), std::out_of_range);
    CHECK_THROWS_AS(incidence_series(traj, 10, 10), std::out_of_range);
    CHECK_THROWS_AS(incidence_series(traj, 0, 61), std::out_of_range);
}

TEST_CASE("trajectory CSV has the documented header and row count") {
    const ModelParams p = make_params(3.0, 0.0, 1.0);
    const Trajectory traj = integrate(p, initial_state(40.0, p), 5);
    std::ostringstream out;
    write_trajectory_csv(traj, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "day,S,E,I,R,incidence");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 6);
}

TEST_CASE("integrate rejects bad horizons and steps") {
    const ModelParams p = make_params(3.0, 0.0, 1.0);
    CHECK_THROWS_AS(integrate(p, initial_state(40.0, p), 0), std::invalid_argument);
    CHECK_THROWS_AS(integrate(p, initial_state(40.0, p), 10, 0.03), std::invalid_argument);
}

}  // TEST_SUITE
