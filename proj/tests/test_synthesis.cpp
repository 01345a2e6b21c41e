#include "heteroseir/synthesis.hpp"

#include "heteroseir/integrate.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace heteroseir;

namespace {

Scenario case_iib(int n_replicates, std::uint64_t seed, int horizon = 100) {
    Scenario sc;
    sc.params.r0 = 3.0;
    sc.params.nu = 1.414;
    sc.params.npi = NpiSchedule{15.0, 20.0, 0.3};
    sc.i0_focal = 40.0;
    sc.horizon = horizon;
    sc.n_replicates = n_replicates;
    sc.rng_seed = seed;
    return sc;
}

}  // namespace

TEST_SUITE("synthesis") {

TEST_CASE("poissonize of zero rates is all zeros") {
    RngStream rng(1);
    const std::vector<double> expected(20, 0.0);
    const auto counts = poissonize(expected, rng);
    for (const long c : counts) CHECK(c == 0);
}

TEST_CASE("poisson sample moments match the rate") {
    // Mean within 3 standard errors and variance within 10% at lambda = 100.
    RngStream rng(12345);
    const int n = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int k = 0; k < n; ++k) {
        const double draw = static_cast<double>(poisson_draw(100.0, rng));
        sum += draw;
        sumsq += draw * draw;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean - 100.0) < 3.0 * std::sqrt(100.0 / n));
    CHECK(std::abs(var - 100.0) / 100.0 < 0.10);
}

TEST_CASE("both sampler branches agree near the switch point") {
    for (const double lambda : {29.5, 30.5}) {
        RngStream rng(99);
        const int n = 20000;
        double sum = 0.0;
        for (int k = 0; k < n; ++k) sum += static_cast<double>(poisson_draw(lambda, rng));
        CHECK(std::abs(sum / n - lambda) < 3.0 * std::sqrt(lambda / n));
    }
}

TEST_CASE("poissonize rejects invalid rates") {
    RngStream rng(1);
    std::vector<double> bad{1.0, -0.5};
    CHECK_THROWS_AS(poissonize(bad, rng), std::invalid_argument);
    std::vector<double> nan{std::nan("")};
    CHECK_THROWS_AS(poissonize(nan, rng), std::invalid_argument);
}

TEST_CASE("fixed seed reproduces identical counts") {
    const Scenario sc = case_iib(3, 777);
    const auto a = generate_scenario(sc);
    const auto b = generate_scenario(sc);
    REQUIRE(a.size() == b.size());
    for (size_t r = 0; r < a.size(); ++r) {
        REQUIRE(a[r][0].counts == b[r][0].counts);
    }
}

TEST_CASE("replicate streams are independent of the replicate count") {
    // Keyed streams: replicate 2 is the same whether 3 or 6 replicates run.
    Scenario small = case_iib(3, 2024, 60);
    Scenario large = case_iib(6, 2024, 60);
    const auto a = generate_scenario(small);
    const auto b = generate_scenario(large);
    CHECK(a[2][0].counts == b[2][0].counts);
}

TEST_CASE("counts span days 1..horizon") {
    const Scenario sc = case_iib(1, 5, 80);
    const auto reps = generate_scenario(sc);
    REQUIRE(reps.size() == 1);
    REQUIRE(reps[0].size() == 1);
    CHECK(reps[0][0].counts.size() == 80);
    for (const long c : reps[0][0].counts) CHECK(c >= 0);
}

TEST_CASE("two-epidemic replicates share parameters and differ in seed size") {
    Scenario sc = case_iib(2, 42, 50);
    sc.i0_auxiliary = 400.0;
    const auto reps = generate_scenario(sc);
    REQUIRE(reps[0].size() == 2);
    CHECK(reps[0][0].i0 == 40.0);
    CHECK(reps[0][1].i0 == 400.0);
    CHECK(reps[0][0].truth.r0 == reps[0][1].truth.r0);
    CHECK(reps[0][0].truth.nu == reps[0][1].truth.nu);
    CHECK(reps[0][0].counts != reps[0][1].counts);
}

TEST_CASE("sample mean of counts tracks the deterministic incidence") {
    // Across 200 replicates the per-day mean should sit within 5 standard
    // errors on at least 99% of days.
    const Scenario sc = case_iib(200, 31415, 60);
    const auto reps = generate_scenario(sc);
    const auto expected = expected_incidence(sc.params, sc.i0_focal, sc.horizon);

    int days_ok = 0;
    for (size_t day = 0; day < expected.size(); ++day) {
        double sum = 0.0;
        for (const auto& rep : reps) sum += static_cast<double>(rep[0].counts[day]);
        const double mean = sum / static_cast<double>(reps.size());
        const double se = std::sqrt(std::max(expected[day], 1e-12) / static_cast<double>(reps.size()));
        if (std::abs(mean - expected[day]) <= 5.0 * se) ++days_ok;
    }
    CHECK(days_ok >= static_cast<int>(0.99 * static_cast<double>(expected.size())));
}

TEST_CASE("dataset CSV and sidecar JSON round-trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "heteroseir_synth_test";
    fs::create_directories(dir);

    Scenario sc = case_iib(3, 99, 40);
    sc.i0_auxiliary = 400.0;
    const auto reps = generate_scenario(sc);
    const std::string csv = (dir / "datasets.csv").string();
    const std::string meta = (dir / "scenario.json").string();
    write_datasets_csv(reps, csv);
    write_scenario_meta(sc, meta);

    const auto loaded = read_datasets_csv(csv, meta);
    REQUIRE(loaded.size() == reps.size());
    for (size_t r = 0; r < reps.size(); ++r) {
        REQUIRE(loaded[r].size() == 2);
        CHECK(loaded[r][0].counts == reps[r][0].counts);
        CHECK(loaded[r][1].counts == reps[r][1].counts);
        CHECK(loaded[r][1].i0 == 400.0);
    }
    const Scenario sc2 = read_scenario_meta(meta);
    CHECK(sc2.params.r0 == sc.params.r0);
    CHECK(sc2.params.nu == sc.params.nu);
    CHECK(sc2.params.npi.c1 == sc.params.npi.c1);
    CHECK(sc2.rng_seed == sc.rng_seed);
    fs::remove_all(dir);
}

TEST_CASE("scenario validation") {
    Scenario sc = case_iib(0, 1);
    CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
    sc = case_iib(1, 1);
    sc.horizon = 0;
    CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
}

}  // TEST_SUITE
