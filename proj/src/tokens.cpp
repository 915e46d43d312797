#include "mclab/tokens.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "mclab/csv.hpp"
#include "mclab/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mclab {

std::size_t TokenSystem::pair_offset(std::size_t i, std::size_t j) const {
    // row-major upper triangle of an n x n matrix, i < j
    const std::size_t n = locations_.size();
    return i * n - i * (i + 1) / 2 + (j - i - 1);
}

double TokenSystem::clock(std::size_t i, std::size_t j) const {
    if (i == j || i >= size() || j >= size()) throw InvalidInput("clock: need two distinct token indices");
    if (i > j) std::swap(i, j);
    return clocks_[pair_offset(i, j)];
}

TokenSystem TokenSystem::init(const InitialMeasure& measure, std::size_t n, const MetricSpace& space,
                              const RateFunction& phi, RandomStream& rng, std::size_t cap) {
    if (n < 1) throw InvalidInput("token system needs n >= 1");
    if (n > cap) throw CapacityError("token count exceeds the configured cap (clock matrix is O(N^2))");

    TokenSystem sys(space, phi);
    sys.locations_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) sys.locations_.push_back(measure.sample(rng));

    sys.clocks_.assign(n * (n - 1) / 2, 0.0);
    const std::uint64_t row_seed = rng.next_u64();

    // Each row draws from its own child stream: the sampled system does not
    // depend on whether rows are filled serially or in parallel.
#pragma omp parallel for schedule(dynamic, 8) if (n >= 512)
    for (long long ii = 0; ii < static_cast<long long>(n) - 1; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        RandomStream row_rng = child_stream(row_seed, i, /*tag=*/1);
        const std::size_t base = sys.pair_offset(i, i + 1);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (sys.locations_[i] == sys.locations_[j]) {
                sys.clocks_[base + (j - i - 1)] = 0.0;
                continue;
            }
            const double rate = phi(space.distance(sys.locations_[i], sys.locations_[j]));
            double t;
            do {
                t = row_rng.exponential(rate);
            } while (t == 0.0);
            sys.clocks_[base + (j - i - 1)] = t;
        }
    }

    sys.finalize();
    return sys;
}

TokenSystem TokenSystem::from_parts(MetricSpace space, RateFunction phi, std::vector<Point> locations,
                                    std::vector<double> clocks_upper) {
    const std::size_t n = locations.size();
    if (clocks_upper.size() != n * (n - 1) / 2) throw InvalidInput("from_parts: clock matrix size mismatch");
    TokenSystem sys(std::move(space), std::move(phi));
    sys.locations_ = std::move(locations);
    sys.clocks_ = std::move(clocks_upper);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool coincident = sys.locations_[i] == sys.locations_[j];
            const double t = sys.clocks_[sys.pair_offset(i, j)];
            if (coincident != (t == 0.0))
                throw InvalidInput("from_parts: clocks must be zero exactly on coincident pairs");
        }
    sys.finalize();
    return sys;
}

void TokenSystem::finalize() {
    const std::size_t n = locations_.size();

    // coincidence groups, keyed by the lowest token at each repeated location
    std::map<Point, std::vector<std::uint32_t>> sites;
    for (std::size_t i = 0; i < n; ++i) sites[locations_[i]].push_back(static_cast<std::uint32_t>(i));
    zero_groups_.clear();
    for (auto& [loc, members] : sites)
        if (members.size() >= 2) zero_groups_.push_back(members);
    std::sort(zero_groups_.begin(), zero_groups_.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });

    sorted_.clear();
    sorted_.reserve(clocks_.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t base = i * n - i * (i + 1) / 2;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double t = clocks_[base + (j - i - 1)];
            if (t > 0.0)
                sorted_.push_back({t, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
        }
    }
    std::sort(sorted_.begin(), sorted_.end(), [](const ClockEvent& a, const ClockEvent& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
}

TokenSystem TokenSystem::restrict_to(std::size_t m) const {
    if (m < 1 || m > size()) throw InvalidInput("restrict_to: need 1 <= m <= n");
    TokenSystem sub(space_, phi_);
    sub.locations_.assign(locations_.begin(), locations_.begin() + static_cast<std::ptrdiff_t>(m));
    sub.clocks_.reserve(m * (m - 1) / 2);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) sub.clocks_.push_back(clocks_[pair_offset(i, j)]);
    sub.finalize();
    return sub;
}

PartitionCursor::PartitionCursor(const TokenSystem& system) : system_(&system) {
    const std::size_t n = system.size();
    parent_.resize(n);
    std::iota(parent_.begin(), parent_.end(), 0u);
    alive_.assign(n, 1);
    alive_count_ = n;
    // meetings at t = 0 happen as location groups into the lowest token
    for (const auto& group : system.zero_groups()) {
        const std::uint32_t root = group.front();
        for (std::size_t k = 1; k < group.size(); ++k) {
            parent_[group[k]] = root;
            alive_[group[k]] = 0;
            --alive_count_;
        }
    }
}

std::uint32_t PartitionCursor::owner(std::uint32_t token) {
    std::uint32_t root = token;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[token] != root) {
        const std::uint32_t up = parent_[token];
        parent_[token] = root;
        token = up;
    }
    return root;
}

bool PartitionCursor::apply(const ClockEvent& ev) {
    if (!alive_[ev.i] || !alive_[ev.j]) return false;  // trivial meeting
    parent_[ev.j] = ev.i;
    alive_[ev.j] = 0;
    --alive_count_;
    applied_.push_back(ev);
    return true;
}

void PartitionCursor::advance_to(double t) {
    if (t < time_) throw InvalidInput("cursor cannot move backwards");
    const auto& events = system_->sorted_events();
    while (next_ < events.size() && events[next_].time <= t) {
        apply(events[next_]);
        ++next_;
    }
    time_ = t;
}

std::optional<ClockEvent> PartitionCursor::advance_next_event() {
    const auto& events = system_->sorted_events();
    while (next_ < events.size()) {
        const ClockEvent ev = events[next_];
        ++next_;
        if (apply(ev)) {
            time_ = std::max(time_, ev.time);
            return ev;
        }
    }
    return std::nullopt;
}

PartitionState PartitionCursor::snapshot() {
    PartitionState st;
    st.time = time_;
    const std::size_t n = parent_.size();
    st.owner.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        st.owner[i] = owner(static_cast<std::uint32_t>(i));
        st.blocks[st.owner[i]].push_back(static_cast<std::uint32_t>(i));
    }
    st.events = applied_;
    return st;
}

PartitionState evolve(const TokenSystem& system, double t) {
    if (t < 0.0) throw InvalidInput("evolve: time must be nonnegative");
    PartitionCursor cursor(system);
    cursor.advance_to(t);
    return cursor.snapshot();
}

DiscreteMeasure empirical_measure(const TokenSystem& system, const PartitionState& state) {
    const double n = static_cast<double>(state.owner.size());
    std::vector<Atom> atoms;
    atoms.reserve(state.blocks.size());
    for (const auto& [root, members] : state.blocks)
        atoms.push_back({system.location(root), static_cast<double>(members.size()) / n});
    return DiscreteMeasure(std::move(atoms));
}

double dust_fraction(const PartitionState& state) {
    std::size_t singletons = 0;
    for (const auto& [root, members] : state.blocks)
        if (members.size() == 1) ++singletons;
    return static_cast<double>(singletons) / static_cast<double>(state.owner.size());
}

std::vector<double> block_masses(const PartitionState& state) {
    std::vector<double> masses;
    masses.reserve(state.blocks.size());
    const double n = static_cast<double>(state.owner.size());
    for (const auto& [root, members] : state.blocks)
        masses.push_back(static_cast<double>(members.size()) / n);
    std::sort(masses.begin(), masses.end(), std::greater<>());
    return masses;
}

std::size_t count_alive_in(const PartitionState& state, const TokenSystem& system,
                           const std::function<bool(const Point&)>& region) {
    std::size_t count = 0;
    for (std::size_t k = 0; k < state.owner.size(); ++k)
        if (state.owner[k] == k && region(system.location(k))) ++count;
    return count;
}

namespace {

struct PrefixCounts {
    std::vector<long long> prefix;  // tokens < n_prefix owned by k
    std::vector<long long> full;    // all tokens owned by k
    long long wn = 0, wm = 0;       // lcm/N and lcm/M

    long long numerator() const {
        long long num = 0;
        for (std::size_t k = 0; k < full.size(); ++k)
            num += std::llabs(prefix[k] * wn - full[k] * wm);
        return num;
    }
};

PrefixCounts make_counts(PartitionCursor& cursor, const TokenSystem& system, std::size_t n_prefix) {
    const std::size_t m = system.size();
    PrefixCounts c;
    c.prefix.assign(m, 0);
    c.full.assign(m, 0);
    for (std::size_t k = 0; k < m; ++k) {
        const std::uint32_t o = cursor.owner(static_cast<std::uint32_t>(k));
        c.full[o] += 1;
        if (k < n_prefix) c.prefix[o] += 1;
    }
    const long long n = static_cast<long long>(n_prefix), mm = static_cast<long long>(m);
    const long long g = std::gcd(n, mm);
    const long long lcm = n / g * mm;
    c.wn = lcm / n;
    c.wm = lcm / mm;
    return c;
}

}  // namespace

std::vector<TvSample> prefix_tv_path(const TokenSystem& system, std::size_t n_prefix, double t0) {
    if (n_prefix < 1 || n_prefix > system.size()) throw InvalidInput("prefix_tv_path: bad prefix size");
    const double denom = 2.0 * static_cast<double>(std::lcm(static_cast<long long>(n_prefix),
                                                            static_cast<long long>(system.size())));
    PartitionCursor cursor(system);
    cursor.advance_to(t0);
    PrefixCounts counts = make_counts(cursor, system, n_prefix);

    std::vector<TvSample> out;
    const long long first = counts.numerator();
    out.push_back({t0, first, static_cast<double>(first) / denom});
    while (auto ev = cursor.advance_next_event()) {
        counts.prefix[ev->i] += counts.prefix[ev->j];
        counts.prefix[ev->j] = 0;
        counts.full[ev->i] += counts.full[ev->j];
        counts.full[ev->j] = 0;
        const long long num = counts.numerator();
        out.push_back({ev->time, num, static_cast<double>(num) / denom});
    }
    return out;
}

double prefix_tv_at(const TokenSystem& system, std::size_t n_prefix, double t) {
    PartitionCursor cursor(system);
    cursor.advance_to(t);
    PrefixCounts counts = make_counts(cursor, system, n_prefix);
    const double denom = 2.0 * static_cast<double>(std::lcm(static_cast<long long>(n_prefix),
                                                            static_cast<long long>(system.size())));
    return static_cast<double>(counts.numerator()) / denom;
}

void write_partition_csv(const TokenSystem& system, PartitionState& state, const std::filesystem::path& path) {
    CsvWriter csv(path);
    csv.row({"token", "owner", "location_repr"});
    for (std::size_t i = 0; i < state.owner.size(); ++i)
        csv.row({std::to_string(i), std::to_string(state.owner[i]), system.location(state.owner[i]).repr()});
}

}  // namespace mclab
