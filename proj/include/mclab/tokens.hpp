#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "mclab/measure.hpp"
#include "mclab/rate.hpp"
#include "mclab/rng.hpp"

namespace mclab {

struct ClockEvent {
    double time = 0.0;
    std::uint32_t i = 0, j = 0;  // i < j; at a nontrivial meeting j merges into i
};

// The N-token construction: IID locations, one exponential clock per pair
// (zero exactly on coincidence), all sampled eagerly at init. Immutable
// afterwards; evolution is a pure function of (system, t).
//
// Clock rows are sampled from per-row child streams, so the sampled system
// is identical whether rows are filled serially or in parallel.
class TokenSystem {
  public:
    static constexpr std::size_t kDefaultCap = 4096;  // ~8M clocks

    static TokenSystem init(const InitialMeasure& measure, std::size_t n, const MetricSpace& space,
                            const RateFunction& phi, RandomStream& rng, std::size_t cap = kDefaultCap);

    // a system assembled from explicit parts (used by the coupling module);
    // clocks must already satisfy the zero-iff-coincident rule
    static TokenSystem from_parts(MetricSpace space, RateFunction phi, std::vector<Point> locations,
                                  std::vector<double> clocks_upper);

    std::size_t size() const { return locations_.size(); }
    const Point& location(std::size_t i) const { return locations_[i]; }
    const std::vector<Point>& locations() const { return locations_; }
    const MetricSpace& space() const { return space_; }
    const RateFunction& phi() const { return phi_; }

    double clock(std::size_t i, std::size_t j) const;  // t_ij, symmetric, i != j

    // positive clocks ascending, ties by (i, j)
    const std::vector<ClockEvent>& sorted_events() const { return sorted_; }
    // time-zero coincidence groups (size >= 2), each sorted ascending
    const std::vector<std::vector<std::uint32_t>>& zero_groups() const { return zero_groups_; }

    // the m-token system sharing locations 1..m and the clock sub-matrix
    TokenSystem restrict_to(std::size_t m) const;

  private:
    TokenSystem(MetricSpace space, RateFunction phi) : space_(std::move(space)), phi_(std::move(phi)) {}
    void finalize();  // builds zero groups and the sorted event list
    std::size_t pair_offset(std::size_t i, std::size_t j) const;

    MetricSpace space_;
    RateFunction phi_;
    std::vector<Point> locations_;
    std::vector<double> clocks_;  // upper triangular, row-major
    std::vector<ClockEvent> sorted_;
    std::vector<std::vector<std::uint32_t>> zero_groups_;
};

struct PartitionState {
    double time = 0.0;
    std::vector<std::uint32_t> owner;                              // u_i, owner <= i
    std::map<std::uint32_t, std::vector<std::uint32_t>> blocks;    // key = min element
    std::vector<ClockEvent> events;                                // applied nontrivial meetings
};

// Incremental evolution: applies meetings in time order, skipping trivial
// ones in O(1) via alive flags. Union-find roots are block minima, so the
// root is the owner.
class PartitionCursor {
  public:
    explicit PartitionCursor(const TokenSystem& system);

    void advance_to(double t);  // applies all meetings with time <= t
    // applies meetings up to and including the next nontrivial one; nullopt
    // when none remain (fully evolved)
    std::optional<ClockEvent> advance_next_event();

    double time() const { return time_; }
    std::uint32_t owner(std::uint32_t token);
    bool alive(std::uint32_t token) const { return alive_[token]; }
    std::size_t alive_count() const { return alive_count_; }
    PartitionState snapshot();

  private:
    bool apply(const ClockEvent& ev);  // true if nontrivial

    const TokenSystem* system_;
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint8_t> alive_;
    std::size_t next_ = 0;
    double time_ = 0.0;
    std::size_t alive_count_ = 0;
    std::vector<ClockEvent> applied_;
};

PartitionState evolve(const TokenSystem& system, double t);

// mu^N_t: mass (#tokens owned)/N at each alive owner's location
DiscreteMeasure empirical_measure(const TokenSystem& system, const PartitionState& state);

double dust_fraction(const PartitionState& state);  // singleton blocks / N

std::vector<double> block_masses(const PartitionState& state);  // descending, sums to 1

// #alive tokens whose own location satisfies the predicate
std::size_t count_alive_in(const PartitionState& state, const TokenSystem& system,
                           const std::function<bool(const Point&)>& region);

// d_TV between the prefix empirical measures mu^N and mu^M (M = system size)
// at t0 and after every subsequent nontrivial meeting, as exact rationals
// over the common denominator 2*lcm(N,M). First entry is at t0.
struct TvSample {
    double time = 0.0;
    long long numerator = 0;  // d_TV = numerator / (2 lcm(N, M))
    double value = 0.0;
};
std::vector<TvSample> prefix_tv_path(const TokenSystem& system, std::size_t n_prefix, double t0);

// d_TV(mu^N_t, mu^M_t) at a single time
double prefix_tv_at(const TokenSystem& system, std::size_t n_prefix, double t);

void write_partition_csv(const TokenSystem& system, PartitionState& state, const std::filesystem::path& path);

}  // namespace mclab
