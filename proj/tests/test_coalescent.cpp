// Event-driven coalescent core: winner law, race probabilities, absorption,
// mass conservation, determinism, and the small-instance oracle equivalence.

#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "mclab/coalescent.hpp"
#include "mclab/errors.hpp"
#include "mclab/oracle.hpp"
#include "mclab/parallel.hpp"
#include "mclab/rng.hpp"
#include "mclab/stats.hpp"

using namespace mclab;

namespace {

const MetricSpace kLine = MetricSpace::interval();
const RateFunction kInv1 = RateFunction::inverse_power(1.0);

DiscreteMeasure two_atoms(double p) {
    return DiscreteMeasure({{Point::scalar(0.0), p}, {Point::scalar(1.0), 1.0 - p}});
}

}  // namespace

TEST_CASE("single atom is already absorbed") {
    const DiscreteMeasure point({{Point::scalar(0.3), 1.0}});
    RandomStream rng(1);
    const StepResult s = step(MCState{point, 0.0}, kInv1, kLine, rng);
    CHECK(s.absorbed);

    const Trajectory traj = run(point, kInv1, kLine, std::nullopt, rng);
    CHECK(traj.events.empty());
    CHECK(coalescence_time(traj) == 0.0);
}

TEST_CASE("horizon zero leaves the initial state untouched") {
    RandomStream rng(2);
    const DiscreteMeasure m = two_atoms(0.4);
    const Trajectory traj = run(m, kInv1, kLine, 0.0, rng);
    CHECK(traj.events.empty());
    CHECK(traj.final_state.measure.size() == 2);
    CHECK(traj.final_state.clock == 0.0);
    CHECK_THROWS_AS(coalescence_time(traj), NotAbsorbed);
}

TEST_CASE("two-atom winner frequency matches the mass ratio") {
    const DiscreteMeasure m = two_atoms(0.3);
    const std::size_t reps = 20000;
    std::size_t light_wins = 0;
    for (std::size_t k = 0; k < reps; ++k) {
        RandomStream rng = child_stream(7, k);
        const StepResult s = step(MCState{m, 0.0}, kInv1, kLine, rng);
        REQUIRE_FALSE(s.absorbed);
        CHECK(s.event.transferred_mass == doctest::Approx(s.event.winner_index == 0 ? 0.7 : 0.3));
        if (s.event.winner_index == 0) ++light_wins;
    }
    const double freq = static_cast<double>(light_wins) / static_cast<double>(reps);
    const double se = std::sqrt(0.3 * 0.7 / static_cast<double>(reps));
    CHECK(std::abs(freq - 0.3) <= 4.0 * se);
}

TEST_CASE("first-meeting pair follows the competing-exponentials race") {
    // pair rates nu_01 = 1, nu_02 = 2, nu_12 = 5 through a tabulated kernel
    // on a (triangle-legal) finite metric; race probabilities 1/8, 2/8, 5/8
    const MetricSpace finite = MetricSpace::finite({{0.0, 0.6, 0.4}, {0.6, 0.0, 0.2}, {0.4, 0.2, 0.0}});
    const RateFunction tab = RateFunction::tabulated({0.2, 0.4, 0.6}, {5.0, 2.0, 1.0});
    const DiscreteMeasure m({{Point::finite_index(0), 0.25},
                             {Point::finite_index(1), 0.35},
                             {Point::finite_index(2), 0.4}});
    const std::size_t reps = 100000;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> firsts;
    for (std::size_t k = 0; k < reps; ++k) {
        RandomStream rng = child_stream(13, k);
        const StepResult s = step(MCState{m, 0.0}, tab, finite, rng);
        const auto pair = std::minmax(s.event.winner_index, s.event.loser_index);
        firsts[{pair.first, pair.second}] += 1;
    }
    const std::map<std::pair<std::size_t, std::size_t>, double> expected = {
        {{0, 1}, 1.0 / 8.0}, {{0, 2}, 2.0 / 8.0}, {{1, 2}, 5.0 / 8.0}};
    for (const auto& [pair, prob] : expected) {
        const double freq = static_cast<double>(firsts[pair]) / static_cast<double>(reps);
        const double se = std::sqrt(prob * (1.0 - prob) / static_cast<double>(reps));
        CHECK(std::abs(freq - prob) <= 4.0 * se);
    }
}

TEST_CASE("runs absorb, conserve mass, and shrink support by one per event") {
    for (std::size_t k = 0; k < 200; ++k) {
        RandomStream rng = child_stream(21, k);
        const DiscreteMeasure m({{Point::scalar(0.0), 0.1},
                                 {Point::scalar(0.25), 0.2},
                                 {Point::scalar(0.6), 0.3},
                                 {Point::scalar(1.0), 0.4}});
        const Trajectory traj = run(m, kInv1, kLine, std::nullopt, rng);
        CHECK(traj.absorbed());
        CHECK(traj.events.size() == 3);

        // strictly increasing event times
        for (std::size_t e = 1; e < traj.events.size(); ++e)
            CHECK(traj.events[e].time > traj.events[e - 1].time);

        // replay: mass conserved and support shrinks within the initial one
        std::vector<double> masses = {0.1, 0.2, 0.3, 0.4};
        for (const auto& ev : traj.events) {
            CHECK(ev.transferred_mass == doctest::Approx(masses[ev.loser_index]).epsilon(1e-12));
            masses[ev.winner_index] += masses[ev.loser_index];
            masses[ev.loser_index] = 0.0;
            const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
            CHECK(std::abs(total - 1.0) <= 1e-12);
        }
        CHECK(traj.final_state.measure.mass(0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(m.find(traj.final_state.measure.location(0)).has_value());
    }
}

TEST_CASE("coalescence time of a two-atom instance is Exp(rate)") {
    // atoms at distance 0.5, phi = 1/x: rate 2, mean 0.5
    const DiscreteMeasure m({{Point::scalar(0.25), 0.5}, {Point::scalar(0.75), 0.5}});
    const std::size_t reps = 100000;
    std::vector<double> times(reps);
    for (std::size_t k = 0; k < reps; ++k) {
        RandomStream rng = child_stream(31, k);
        times[k] = coalescence_time(run(m, kInv1, kLine, std::nullopt, rng));
    }
    const MeanVar mv = pairwise_mean_var(times);
    CHECK(std::abs(mv.mean - 0.5) <= 4.0 * mv.stderr_of_mean());
}

TEST_CASE("mean absorption time respects the all-pairs-rate bound") {
    // n equal atoms, all pair rates c: E T = (2/c)(1 - 1/n)
    const double c = 2.0;
    const std::size_t n = 5;
    std::vector<std::vector<double>> matrix(n, std::vector<double>(n, 1.0 / c));
    for (std::size_t i = 0; i < n; ++i) matrix[i][i] = 0.0;
    const MetricSpace finite = MetricSpace::finite(matrix);
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < n; ++i) atoms.push_back({Point::finite_index(i), 1.0 / n});
    const DiscreteMeasure m(std::move(atoms));

    const std::size_t reps = 30000;
    std::vector<double> times(reps);
    for (std::size_t k = 0; k < reps; ++k) {
        RandomStream rng = child_stream(37, k);
        times[k] = coalescence_time(run(m, kInv1, finite, std::nullopt, rng));
    }
    const MeanVar mv = pairwise_mean_var(times);
    const double exact = (2.0 / c) * (1.0 - 1.0 / static_cast<double>(n));
    CHECK(std::abs(mv.mean - exact) <= 4.0 * mv.stderr_of_mean());
    // and the coarser comparison bound E T <= 2 / phi_min
    CHECK(mv.mean <= 2.0 / c + 4.0 * mv.stderr_of_mean());
}

TEST_CASE("final location law matches the initial masses") {
    const DiscreteMeasure m({{Point::scalar(0.0), 0.2}, {Point::scalar(1.0), 0.8}});
    const LocationLaw law = final_location_law(m, kInv1, kLine, 100000, 41);
    const double se = std::sqrt(0.2 * 0.8 / 100000.0);
    CHECK(std::abs(law.frequency[0] - 0.2) <= 4.0 * se);

    const DiscreteMeasure point({{Point::scalar(0.5), 1.0}});
    const LocationLaw degenerate = final_location_law(point, kInv1, kLine, 200, 41);
    CHECK(degenerate.frequency[0] == 1.0);
}

TEST_CASE("martingale in law: replicate mean of mu_t(f) equals mu_0(f)") {
    const DiscreteMeasure m({{Point::scalar(0.0), 0.1},
                             {Point::scalar(0.3), 0.4},
                             {Point::scalar(1.0), 0.5}});
    const TestFunction f = TestFunction::piecewise_linear({{0.0, 1.0}, {0.4, -0.5}, {1.0, 2.0}});
    double mu0_f = 0.0;
    for (const auto& a : m.atoms()) mu0_f += a.mass * f(kLine, a.location);

    const std::size_t reps = 50000;
    std::vector<double> values(reps);
    for (std::size_t k = 0; k < reps; ++k) {
        RandomStream rng = child_stream(43, k);
        const Trajectory traj = run(m, kInv1, kLine, 0.7, rng);
        double v = 0.0;
        for (const auto& a : traj.final_state.measure.atoms()) v += a.mass * f(kLine, a.location);
        values[k] = v;
    }
    const MeanVar mv = pairwise_mean_var(values);
    CHECK(std::abs(mv.mean - mu0_f) <= 4.0 * mv.stderr_of_mean());
}

TEST_CASE("identical seed and config give bit-identical trajectories") {
    const DiscreteMeasure m({{Point::scalar(0.0), 0.25},
                             {Point::scalar(0.4), 0.25},
                             {Point::scalar(0.7), 0.25},
                             {Point::scalar(1.0), 0.25}});
    RandomStream a(77), b(77);
    const Trajectory ta = run(m, kInv1, kLine, std::nullopt, a);
    const Trajectory tb = run(m, kInv1, kLine, std::nullopt, b);
    REQUIRE(ta.events.size() == tb.events.size());
    for (std::size_t e = 0; e < ta.events.size(); ++e) {
        CHECK(ta.events[e].time == tb.events[e].time);
        CHECK(ta.events[e].winner_index == tb.events[e].winner_index);
        CHECK(ta.events[e].loser_index == tb.events[e].loser_index);
        CHECK(ta.events[e].transferred_mass == tb.events[e].transferred_mass);
    }
}

TEST_CASE("time-t state distribution matches the CTMC oracle transient") {
    const DiscreteMeasure m({{Point::scalar(0.0), 0.3},
                             {Point::scalar(0.5), 0.3},
                             {Point::scalar(1.0), 0.4}});
    const CTMCOracle oracle = build_generator(enumerate_states(m), m, kLine, kInv1);
    const double t = 0.8;
    const std::vector<double> pi_t = transient(oracle, t);

    const std::size_t reps = 100000;
    std::vector<std::size_t> counts(oracle.dim(), 0);
    for (std::size_t k = 0; k < reps; ++k) {
        RandomStream rng = child_stream(53, k);
        const Trajectory traj = run(m, kInv1, kLine, t, rng);

        // rebuild the ownership state from the merge events
        std::vector<std::uint8_t> owner = {0, 1, 2};
        std::vector<std::uint8_t> survivor = {0, 1, 2};
        for (const auto& ev : traj.events) {
            const std::uint8_t w = owner[ev.winner_index], l = owner[ev.loser_index];
            for (auto& o : owner)
                if (o == std::max(w, l)) o = std::min(w, l);
            survivor[std::min(w, l)] = static_cast<std::uint8_t>(ev.winner_index);
        }
        OwnershipState st;
        st.block_of.resize(3);
        std::vector<int> label(3, -1);
        std::uint8_t next = 0;
        for (std::size_t a2 = 0; a2 < 3; ++a2) {
            if (label[owner[a2]] < 0) {
                label[owner[a2]] = next++;
                st.survivor.push_back(survivor[owner[a2]]);
            }
            st.block_of[a2] = static_cast<std::uint8_t>(label[owner[a2]]);
        }
        st.block_mass.assign(st.survivor.size(), 0.0);
        for (std::size_t a2 = 0; a2 < 3; ++a2) st.block_mass[st.block_of[a2]] += m.mass(a2);
        counts[oracle.index_of(st)] += 1;
    }
    for (std::size_t s = 0; s < oracle.dim(); ++s) {
        const double freq = static_cast<double>(counts[s]) / static_cast<double>(reps);
        const double se = std::sqrt(std::max(pi_t[s] * (1.0 - pi_t[s]), 1e-300) / static_cast<double>(reps));
        CHECK(std::abs(freq - pi_t[s]) <= 4.0 * se);
    }
}

TEST_CASE("duplicate locations are rejected before they can degenerate a run") {
    CHECK_THROWS_AS(DiscreteMeasure({{Point::scalar(0.5), 0.5}, {Point::scalar(0.5), 0.5}}), InvalidInput);
}
