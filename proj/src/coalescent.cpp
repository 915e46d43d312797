#include "mclab/coalescent.hpp"

#include <cmath>

#include "mclab/csv.hpp"
#include "mclab/errors.hpp"
#include "mclab/parallel.hpp"

namespace mclab {

namespace {

// Working state for a run: atoms with stable original indices, pair rates
// recomputed over alive atoms in lexicographic order so trajectories are
// deterministic for a given (config, seed).
struct Engine {
    const RateFunction& phi;
    const MetricSpace& space;
    std::vector<Point> locations;
    std::vector<double> masses;
    std::vector<std::size_t> original_index;
    double clock = 0.0;

    Engine(const DiscreteMeasure& m, const RateFunction& phi_, const MetricSpace& space_, double t0)
        : phi(phi_), space(space_), clock(t0) {
        locations.reserve(m.size());
        masses.reserve(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            locations.push_back(m.location(i));
            masses.push_back(m.mass(i));
            original_index.push_back(i);
        }
    }

    std::size_t size() const { return masses.size(); }

    enum class Outcome { Absorbed, BeyondHorizon, Jumped };

    // one jump, unless absorbed or the sampled jump lands past the horizon
    Outcome jump(RandomStream& rng, MergeEvent& ev, const std::optional<double>& horizon) {
        const std::size_t k = size();
        if (k <= 1) return Outcome::Absorbed;

        std::vector<double> pair_rates;
        pair_rates.reserve(k * (k - 1) / 2);
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j) {
                const double nu = phi(space.distance(locations[i], locations[j]));
                if (!std::isfinite(nu))
                    throw DegenerateState("non-finite meeting rate: duplicate locations in coalescent state");
                pair_rates.push_back(nu);
                total += nu;
            }
        if (!(total > 0.0)) throw DegenerateState("total meeting rate is not positive");

        const double wait = rng.exponential(total);
        if (horizon && clock + wait > *horizon) return Outcome::BeyondHorizon;
        const std::size_t pick = rng.pick_index(pair_rates);
        // invert the lexicographic pair enumeration
        std::size_t i = 0, base = 0;
        while (base + (k - 1 - i) <= pick) {
            base += k - 1 - i;
            ++i;
        }
        const std::size_t j = i + 1 + (pick - base);

        const double pi = masses[i], pj = masses[j];
        const bool i_wins = rng.uniform() < pi / (pi + pj);
        const std::size_t winner = i_wins ? i : j;
        const std::size_t loser = i_wins ? j : i;

        clock += wait;
        ev.time = clock;
        ev.loser_location = locations[loser];
        ev.winner_location = locations[winner];
        ev.transferred_mass = masses[loser];
        ev.loser_index = original_index[loser];
        ev.winner_index = original_index[winner];

        masses[winner] += masses[loser];
        locations.erase(locations.begin() + static_cast<std::ptrdiff_t>(loser));
        masses.erase(masses.begin() + static_cast<std::ptrdiff_t>(loser));
        original_index.erase(original_index.begin() + static_cast<std::ptrdiff_t>(loser));

        double mass_total = 0.0;
        for (double m : masses) mass_total += m;
        if (std::abs(mass_total - 1.0) > 1e-12) throw DegenerateState("mass conservation violated after a merge");
        return Outcome::Jumped;
    }

    MCState state() const {
        std::vector<Atom> atoms;
        atoms.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) atoms.push_back({locations[i], masses[i]});
        return MCState{DiscreteMeasure(std::move(atoms)), clock};
    }
};

}  // namespace

StepResult step(const MCState& state, const RateFunction& phi, const MetricSpace& space, RandomStream& rng) {
    Engine engine(state.measure, phi, space, state.clock);
    StepResult result{true, state, {}};
    MergeEvent ev;
    if (engine.jump(rng, ev, std::nullopt) != Engine::Outcome::Jumped) return result;
    result.absorbed = false;
    result.state = engine.state();
    result.event = ev;
    return result;
}

Trajectory run(const DiscreteMeasure& measure, const RateFunction& phi, const MetricSpace& space,
               std::optional<double> horizon, RandomStream& rng) {
    Engine engine(measure, phi, space, 0.0);
    std::vector<MergeEvent> events;
    MergeEvent ev;
    while (engine.jump(rng, ev, horizon) == Engine::Outcome::Jumped) events.push_back(ev);
    if (horizon) engine.clock = *horizon;
    return Trajectory{std::move(events), engine.state(), engine.original_index};
}

double coalescence_time(const Trajectory& trajectory) {
    if (!trajectory.absorbed()) throw NotAbsorbed("coalescence_time: run stopped at its horizon");
    return trajectory.events.empty() ? 0.0 : trajectory.events.back().time;
}

LocationLaw final_location_law(const DiscreteMeasure& measure, const RateFunction& phi,
                               const MetricSpace& space, std::size_t replicates, std::uint64_t seed,
                               int threads) {
    const auto winners = run_replicates<std::size_t>(
        replicates,
        [&](std::size_t k) {
            RandomStream rng = child_stream(seed, k);
            const Trajectory t = run(measure, phi, space, std::nullopt, rng);
            return t.surviving_indices.at(0);
        },
        threads);
    LocationLaw law;
    law.replicates = replicates;
    law.count.assign(measure.size(), 0);
    for (std::size_t w : winners) law.count[w] += 1;
    law.frequency.resize(measure.size());
    for (std::size_t i = 0; i < measure.size(); ++i)
        law.frequency[i] = static_cast<double>(law.count[i]) / static_cast<double>(replicates);
    return law;
}

void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path) {
    CsvWriter csv(path);
    csv.row({"time", "loser_idx", "winner_idx", "mass"});
    for (const auto& ev : trajectory.events)
        csv.row({format_real(ev.time), std::to_string(ev.loser_index), std::to_string(ev.winner_index),
                 format_real(ev.transferred_mass)});
}

}  // namespace mclab
