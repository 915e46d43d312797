#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "mclab/measure.hpp"
#include "mclab/rate.hpp"
#include "mclab/rng.hpp"

namespace mclab {

// Exact event-driven simulation of the finite metric-coalescent jump process.
// Scheduling is the total-rate (Gillespie) form: holding time Exp(sum of
// pair rates), pair picked proportionally to its rate, winner picked
// proportionally to its own mass. Equal in law to per-pair clocks by
// memorylessness.

struct MCState {
    DiscreteMeasure measure;
    double clock = 0.0;
};

struct MergeEvent {
    double time = 0.0;
    Point loser_location;
    Point winner_location;
    double transferred_mass = 0.0;  // the loser's pre-merge mass
    // original-atom indices, stable across the run (drives the CSV export)
    std::size_t loser_index = 0;
    std::size_t winner_index = 0;
};

struct StepResult {
    bool absorbed = false;  // one atom left, no pairs
    MCState state;
    MergeEvent event;  // valid only when !absorbed
};

StepResult step(const MCState& state, const RateFunction& phi, const MetricSpace& space, RandomStream& rng);

struct Trajectory {
    std::vector<MergeEvent> events;
    MCState final_state;
    // original-atom index of each surviving atom, parallel to final_state.measure
    std::vector<std::size_t> surviving_indices;
    bool absorbed() const { return final_state.measure.size() == 1; }
};

// horizon = nullopt runs until absorption (finite a.s. under (H1))
Trajectory run(const DiscreteMeasure& measure, const RateFunction& phi, const MetricSpace& space,
               std::optional<double> horizon, RandomStream& rng);

// time of the last merge; 0 for a point-mass start; NotAbsorbed if the run
// stopped at its horizon with more than one atom
double coalescence_time(const Trajectory& trajectory);

struct LocationLaw {
    std::vector<double> frequency;   // per original atom index
    std::vector<std::size_t> count;  // raw counts
    std::size_t replicates = 0;
};

// empirical law of the absorbing atom over independent runs
LocationLaw final_location_law(const DiscreteMeasure& measure, const RateFunction& phi,
                               const MetricSpace& space, std::size_t replicates, std::uint64_t seed,
                               int threads = 0);

// time,loser_idx,winner_idx,mass; indices into the initial atom list
void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path);

}  // namespace mclab
