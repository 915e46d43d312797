// Canned reproductions: the bounded-rate counterexample against its oracle
// law and analytic bounds, the sparse-support survival bound, the Kingman
// sweep schema, and the TV-convergence trend. Plus bit-exact reproducibility
// of every experiment from (name, parameters, seed).

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "mclab/errors.hpp"
#include "mclab/experiments.hpp"

using namespace mclab;

namespace {

TestConfig config(std::size_t replicates, std::uint64_t seed) {
    TestConfig cfg;
    cfg.replicates = replicates;
    cfg.base_seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("bounded-rate counterexample: frozen bound, oracle law, limit law") {
    const RateFunction inv1 = RateFunction::inverse_power(1.0);
    const ExperimentResult result = bounded_phi_counterexample(inv1, 0.5, 1.0, config(20000, 3));

    // (1/2)(1/3)(1 - e^{-3}) e^{-2}, evaluated independently
    CHECK(result.scalar("lower_bound_p23") == doctest::Approx(0.021432889372921204).epsilon(1e-12));

    CHECK(result.verdict("p23_above_analytic_bound"));
    CHECK(result.verdict("matches_oracle_law"));
    CHECK(result.verdict("limit_law_has_no_p23_mass"));

    // limit law at 1/3 carries e^{-phi(1) t}
    REQUIRE(result.rows.size() == 4);
    CHECK(result.rows[1][4] == doctest::Approx(std::exp(-1.0)));
    CHECK(result.rows[2][4] == 0.0);

    // simulated and oracle probabilities sum to one
    double sim_total = 0.0, oracle_total = 0.0;
    for (const auto& row : result.rows) {
        sim_total += row[1];
        oracle_total += row[3];
    }
    CHECK(sim_total == doctest::Approx(1.0));
    CHECK(oracle_total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("bounded-rate counterexample: constant rates keep 2/3-mass alive") {
    const RateFunction constant = RateFunction::constant(1.0);
    for (double x_n : {0.5, 0.125}) {
        const ExperimentResult result = bounded_phi_counterexample(constant, x_n, 1.0, config(10000, 5));
        CHECK(result.verdict("p23_above_liminf_bound"));
        CHECK(result.scalar("limit_p23") == 0.0);
        // the liminf expression with phi(x_n) = phi(1) = c
        const double c = 1.0;
        const double expected = 0.25 * (1.0 - std::exp(-c)) * std::exp(-c);
        CHECK(result.scalar("liminf_bound_p23") == doctest::Approx(expected));
        CHECK(result.scalar("sim_p23") >= expected - 4.0 * result.scalar("sim_p23_stderr"));
    }
}

TEST_CASE("sparse support: q_hat by direct summation, placement, bound") {
    const RateFunction inv1 = RateFunction::inverse_power(1.0);
    const ExperimentResult result = sparse_support(inverse_cube_rule, 20, 1.0, inv1, config(10000, 7));

    // cross-check the truncated sum with an independent accumulation
    long double q = 0.0L;
    for (std::size_t i = 1; i <= 20; ++i)
        q += 2.0L * static_cast<long double>(i - 1) / (static_cast<long double>(i) * i * i);
    CHECK(result.scalar("q_hat") == doctest::Approx(static_cast<double>(q)).epsilon(1e-12));
    CHECK(result.scalar("exp_bound") == doctest::Approx(std::exp(-static_cast<double>(q))));
    CHECK(result.verdict("survival_above_bound"));

    // placement respects the rate caps: phi(gap to previous) <= r_{i+1}
    REQUIRE(result.rows.size() == 20);
    for (std::size_t i = 1; i < 20; ++i) {
        const double gap = result.rows[i][1] - result.rows[i - 1][1];
        CHECK(inv1(gap) <= result.rows[i][2] * (1.0 + 1e-12));
    }
}

TEST_CASE("sparse support edges: t = 0 and a single atom") {
    const RateFunction inv1 = RateFunction::inverse_power(1.0);
    const ExperimentResult at0 = sparse_support(inverse_cube_rule, 10, 0.0, inv1, config(500, 9));
    CHECK(at0.scalar("p_no_meeting") == 1.0);
    const ExperimentResult solo = sparse_support(inverse_cube_rule, 1, 5.0, inv1, config(500, 11));
    CHECK(solo.scalar("p_no_meeting") == 1.0);
    CHECK(solo.scalar("q_hat") == 0.0);
}

TEST_CASE("kingman sweep: schema and the exact bound column") {
    const MetricSpace line = MetricSpace::interval();
    const RateFunction inv1 = RateFunction::inverse_power(1.0);
    std::vector<Atom> atoms;
    for (int k = 0; k < 20; ++k) atoms.push_back({Point::scalar(k / 19.0), 0.05});
    const DiscreteMeasure cloud(std::move(atoms));
    std::vector<Point> witness;
    for (const auto& a : cloud.atoms()) witness.push_back(a.location);

    TestConfig cfg = config(150, 13);
    cfg.n_tokens = 64;
    const ExperimentResult sweep = kingman_sweep(InitialMeasure::atomic(cloud), witness,
                                                 [](const Point&) { return true; },
                                                 {0.2, 0.4, 0.8}, line, inv1, cfg);
    CHECK(sweep.columns == std::vector<std::string>{"t", "mean_count", "stderr", "bound", "verdict"});
    REQUIRE(sweep.rows.size() == 3);
    CHECK(sweep.scalar("phi_min") == doctest::Approx(1.0));
    for (const auto& row : sweep.rows) CHECK(row[3] == doctest::Approx(2.0 / row[0]));
    // doubling t halves the bound
    CHECK(sweep.rows[1][3] == doctest::Approx(sweep.rows[0][3] / 2.0));
    CHECK(sweep.verdict("bound_holds_on_grid"));
}

TEST_CASE("tv convergence trend on a uniform box") {
    const MetricSpace line = MetricSpace::interval();
    const RateFunction inv1 = RateFunction::inverse_power(1.0);
    const InitialMeasure box = InitialMeasure::uniform_box({{0.0}, {1.0}});
    const ExperimentResult result =
        tv_convergence(box, 0.5, {32, 64, 128}, line, inv1, config(150, 17));
    REQUIRE(result.rows.size() == 3);
    CHECK(result.verdict("tv_decreasing"));
    CHECK(result.rows[0][1] > result.rows[2][1]);
}

TEST_CASE("tv convergence on an atomic measure at a late time is near zero") {
    // by t = 25 both prefix processes have coalesced onto token 1's atom
    const MetricSpace line = MetricSpace::interval();
    const RateFunction inv1 = RateFunction::inverse_power(1.0);
    const InitialMeasure atoms = InitialMeasure::atomic(
        DiscreteMeasure({{Point::scalar(0.0), 0.5}, {Point::scalar(1.0), 0.5}}));
    const ExperimentResult result = tv_convergence(atoms, 25.0, {16, 32}, line, inv1, config(150, 21));
    for (const auto& row : result.rows) CHECK(row[1] <= 1e-3);
}

TEST_CASE("experiments are reproducible bit-exactly and write CSV + meta") {
    const RateFunction inv1 = RateFunction::inverse_power(1.0);
    const ExperimentResult a = bounded_phi_counterexample(inv1, 0.5, 1.0, config(500, 19));
    const ExperimentResult b = bounded_phi_counterexample(inv1, 0.5, 1.0, config(500, 19));
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t r = 0; r < a.rows.size(); ++r)
        for (std::size_t c = 0; c < a.rows[r].size(); ++c) CHECK(a.rows[r][c] == b.rows[r][c]);

    const auto dir = std::filesystem::temp_directory_path() / "mclab_experiment_test";
    std::filesystem::remove_all(dir);
    write_experiment(a, dir);
    CHECK(std::filesystem::exists(dir / "bounded_phi_counterexample.csv"));
    CHECK(std::filesystem::exists(dir / "bounded_phi_counterexample.meta.json"));
    std::ifstream meta(dir / "bounded_phi_counterexample.meta.json");
    std::string text((std::istreambuf_iterator<char>(meta)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"seed\": \"19\"") != std::string::npos);
    CHECK(text.find("verdicts") != std::string::npos);
    std::filesystem::remove_all(dir);
}
