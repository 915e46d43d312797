#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mclab/measure.hpp"
#include "mclab/rate.hpp"
#include "mclab/test_function.hpp"

namespace mclab {

// Exact small-instance ground truth: the ownership-partition chain of an
// n-atom measure (n <= 4) enumerated as a CTMC, solved by uniformization.

struct OwnershipState {
    // block id per atom; blocks numbered by their minimal atom, ascending
    std::vector<std::uint8_t> block_of;
    // survivor atom per block (the location carrier), parallel to block order
    std::vector<std::uint8_t> survivor;
    std::vector<double> block_mass;  // sums to 1

    std::size_t block_count() const { return survivor.size(); }
    bool absorbing() const { return block_count() == 1; }
    // mass sitting at atom i's location (0 unless i survives its block)
    double mass_at(std::size_t atom) const;
    std::string repr() const;       // e.g. "{0,2}{1}" blocks by minimal atom
    std::string survivors_repr() const;

    friend bool operator==(const OwnershipState& a, const OwnershipState& b) {
        return a.block_of == b.block_of && a.survivor == b.survivor;
    }
};

// all set partitions of {0..n-1} with every survivor choice, canonical order
std::vector<OwnershipState> enumerate_states(const DiscreteMeasure& measure);

struct CTMCOracle {
    std::vector<OwnershipState> states;
    std::vector<double> generator;  // row-major n_states x n_states
    std::size_t initial_state = 0;
    const DiscreteMeasure* measure = nullptr;

    std::size_t dim() const { return states.size(); }
    double q(std::size_t from, std::size_t to) const { return generator[from * dim() + to]; }
    // index of the state matching the given ownership, throws if absent
    std::size_t index_of(const OwnershipState& s) const;
};

CTMCOracle build_generator(const std::vector<OwnershipState>& states, const DiscreteMeasure& measure,
                           const MetricSpace& space, const RateFunction& phi);

// exp(tQ) action on a distribution via uniformization, Poisson tail <= 1e-10
std::vector<double> transient(const CTMCOracle& oracle, double t);
std::vector<double> transient_from(const CTMCOracle& oracle, std::vector<double> initial, double t);

// E[p_i(t) p_j(t)] from the transient state-sum, cross-asserted against the
// closed form p_i(0) p_j(0) exp(-phi(d) t) to 1e-8 (OracleInconsistency on
// mismatch)
double exact_pair_moment(const CTMCOracle& oracle, const MetricSpace& space, const RateFunction& phi,
                         std::size_t i, std::size_t j, double t);

// pushforward of transient(t) under state -> sum_blocks mass * f(survivor
// location); equal values merged within 1e-12, sorted ascending
std::vector<std::pair<double, double>> law_of_f(const CTMCOracle& oracle, const MetricSpace& space,
                                                double t, const TestFunction& f);

// Meeting trees of a small token system: the time-zero coincidence groups
// plus the ordered list of nontrivial merges (loser -> winner, winner is the
// lower, still-alive token). Enumeration covers exactly the observable trees.
struct MeetingTree {
    std::vector<std::vector<std::uint8_t>> zero_groups;
    std::vector<std::pair<std::uint8_t, std::uint8_t>> merges;  // (loser, winner)

    friend bool operator==(const MeetingTree& a, const MeetingTree& b) {
        return a.zero_groups == b.zero_groups && a.merges == b.merges;
    }
    friend bool operator<(const MeetingTree& a, const MeetingTree& b) {
        if (a.zero_groups != b.zero_groups) return a.zero_groups < b.zero_groups;
        return a.merges < b.merges;
    }
    std::string repr() const;
};

// coincidence_pattern: location-group label per token (tokens with equal
// labels start coincident); n <= 3
std::vector<MeetingTree> enumerate_meeting_trees(std::size_t n, const std::vector<int>& coincidence_pattern);

void write_transient_csv(const CTMCOracle& oracle, double t, const std::filesystem::path& path);

}  // namespace mclab
