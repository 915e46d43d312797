#include "mclab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mclab/csv.hpp"
#include "mclab/errors.hpp"

namespace mclab {

double OwnershipState::mass_at(std::size_t atom) const {
    const std::uint8_t b = block_of[atom];
    return survivor[b] == atom ? block_mass[b] : 0.0;
}

std::string OwnershipState::repr() const {
    std::ostringstream os;
    for (std::size_t b = 0; b < block_count(); ++b) {
        os << '{';
        bool first = true;
        for (std::size_t a = 0; a < block_of.size(); ++a)
            if (block_of[a] == b) {
                if (!first) os << ',';
                os << a;
                first = false;
            }
        os << '}';
    }
    return os.str();
}

std::string OwnershipState::survivors_repr() const {
    std::ostringstream os;
    for (std::size_t b = 0; b < block_count(); ++b) {
        if (b) os << ',';
        os << static_cast<int>(survivor[b]);
    }
    return os.str();
}

namespace {

OwnershipState make_state(const DiscreteMeasure& measure, const std::vector<std::uint8_t>& block_of,
                          const std::vector<std::uint8_t>& survivor) {
    OwnershipState s;
    s.block_of = block_of;
    s.survivor = survivor;
    s.block_mass.assign(survivor.size(), 0.0);
    for (std::size_t a = 0; a < block_of.size(); ++a) s.block_mass[block_of[a]] += measure.mass(a);
    return s;
}

}  // namespace

std::vector<OwnershipState> enumerate_states(const DiscreteMeasure& measure) {
    const std::size_t n = measure.size();
    if (n < 1 || n > 4) throw CapacityError("oracle state enumeration supports 1 <= n <= 4 atoms");

    // restricted growth strings enumerate set partitions in canonical order
    std::vector<OwnershipState> out;
    std::vector<std::uint8_t> rgs(n, 0);
    while (true) {
        const std::uint8_t blocks = static_cast<std::uint8_t>(*std::max_element(rgs.begin(), rgs.end()) + 1);
        // all survivor choices, block-ascending, survivor ascending
        std::vector<std::vector<std::uint8_t>> members(blocks);
        for (std::size_t a = 0; a < n; ++a) members[rgs[a]].push_back(static_cast<std::uint8_t>(a));
        std::vector<std::size_t> choice(blocks, 0);
        while (true) {
            std::vector<std::uint8_t> survivor(blocks);
            for (std::size_t b = 0; b < blocks; ++b) survivor[b] = members[b][choice[b]];
            out.push_back(make_state(measure, rgs, survivor));
            std::size_t b = 0;
            while (b < blocks && ++choice[b] == members[b].size()) choice[b++] = 0;
            if (b == blocks) break;
        }
        // next restricted growth string
        std::size_t k = n;
        while (k-- > 1) {
            std::uint8_t prefix_max = 0;
            for (std::size_t a = 0; a < k; ++a) prefix_max = std::max(prefix_max, rgs[a]);
            if (rgs[k] <= prefix_max) {
                ++rgs[k];
                std::fill(rgs.begin() + static_cast<std::ptrdiff_t>(k) + 1, rgs.end(), 0);
                break;
            }
        }
        if (k == 0 || k == static_cast<std::size_t>(-1)) break;
    }
    return out;
}

std::size_t CTMCOracle::index_of(const OwnershipState& s) const {
    for (std::size_t k = 0; k < states.size(); ++k)
        if (states[k] == s) return k;
    throw InvalidInput("ownership state not found in the enumerated space");
}

CTMCOracle build_generator(const std::vector<OwnershipState>& states, const DiscreteMeasure& measure,
                           const MetricSpace& space, const RateFunction& phi) {
    const std::size_t n = measure.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (space.distance(measure.location(i), measure.location(j)) == 0.0)
                throw DegenerateInput("build_generator: coincident atom locations");

    CTMCOracle oracle;
    oracle.states = states;
    oracle.measure = &measure;
    const std::size_t dim = states.size();
    oracle.generator.assign(dim * dim, 0.0);

    for (std::size_t from = 0; from < dim; ++from) {
        const OwnershipState& s = states[from];
        for (std::size_t b1 = 0; b1 < s.block_count(); ++b1)
            for (std::size_t b2 = b1 + 1; b2 < s.block_count(); ++b2) {
                const std::uint8_t a1 = s.survivor[b1], a2 = s.survivor[b2];
                const double rate = phi(space.distance(measure.location(a1), measure.location(a2)));
                const double m1 = s.block_mass[b1], m2 = s.block_mass[b2];
                for (int winner = 0; winner < 2; ++winner) {
                    // merge b2 into b1 (or vice versa), survivor = winner's survivor
                    std::vector<std::uint8_t> merged_block(s.block_of);
                    const std::uint8_t lo = static_cast<std::uint8_t>(std::min<std::size_t>(b1, b2));
                    const std::uint8_t hi = static_cast<std::uint8_t>(std::max<std::size_t>(b1, b2));
                    for (auto& b : merged_block) {
                        if (b == hi) b = lo;
                        else if (b > hi) --b;
                    }
                    std::vector<std::uint8_t> survivor;
                    for (std::size_t b = 0; b < s.block_count(); ++b) {
                        if (b == hi) continue;
                        if (b == lo) survivor.push_back(winner == 0 ? a1 : a2);
                        else survivor.push_back(s.survivor[b]);
                    }
                    OwnershipState target = make_state(measure, merged_block, survivor);
                    const std::size_t to = oracle.index_of(target);
                    const double weight = winner == 0 ? m1 / (m1 + m2) : m2 / (m1 + m2);
                    oracle.generator[from * dim + to] += rate * weight;
                }
            }
        double row = 0.0;
        for (std::size_t to = 0; to < dim; ++to)
            if (to != from) row += oracle.generator[from * dim + to];
        oracle.generator[from * dim + from] = -row;
    }

    // initial state: all singletons, each its own survivor
    std::vector<std::uint8_t> id(n);
    for (std::size_t a = 0; a < n; ++a) id[a] = static_cast<std::uint8_t>(a);
    oracle.initial_state = oracle.index_of(make_state(measure, id, id));
    return oracle;
}

std::vector<double> transient_from(const CTMCOracle& oracle, std::vector<double> initial, double t) {
    const std::size_t dim = oracle.dim();
    if (initial.size() != dim) throw InvalidInput("transient_from: distribution size mismatch");
    if (t < 0.0) throw InvalidInput("transient: time must be nonnegative");
    if (t == 0.0) return initial;

    double lambda = 0.0;
    for (std::size_t k = 0; k < dim; ++k) lambda = std::max(lambda, -oracle.q(k, k));
    if (lambda == 0.0) return initial;

    // P = I + Q/lambda; pi(t) = sum_k Poisson(lambda t)(k) * initial P^k,
    // Poisson weights in log space, truncated at tail mass 1e-10
    const double lt = lambda * t;
    std::vector<double> term = initial;
    std::vector<double> acc(dim, 0.0), next(dim);
    double cumulative = 0.0;
    const double tail = 1e-10;
    for (std::size_t k = 0;; ++k) {
        const double log_w = -lt + static_cast<double>(k) * std::log(lt) - std::lgamma(static_cast<double>(k) + 1.0);
        const double w = std::exp(log_w);
        for (std::size_t s = 0; s < dim; ++s) acc[s] += w * term[s];
        cumulative += w;
        if (cumulative >= 1.0 - tail && static_cast<double>(k) >= lt) break;
        if (k > 100000) throw OracleInconsistency("uniformization failed to converge");
        // term <- term * P
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t from = 0; from < dim; ++from) {
            const double v = term[from];
            if (v == 0.0) continue;
            next[from] += v;  // identity part
            for (std::size_t to = 0; to < dim; ++to) next[to] += v * oracle.q(from, to) / lambda;
        }
        term.swap(next);
    }
    for (double& p : acc) p = std::max(p, 0.0);
    return acc;
}

std::vector<double> transient(const CTMCOracle& oracle, double t) {
    std::vector<double> initial(oracle.dim(), 0.0);
    initial[oracle.initial_state] = 1.0;
    return transient_from(oracle, std::move(initial), t);
}

double exact_pair_moment(const CTMCOracle& oracle, const MetricSpace& space, const RateFunction& phi,
                         std::size_t i, std::size_t j, double t) {
    const DiscreteMeasure& m = *oracle.measure;
    if (i == j || i >= m.size() || j >= m.size()) throw InvalidInput("exact_pair_moment: need two distinct atoms");
    const std::vector<double> pi_t = transient(oracle, t);
    double state_sum = 0.0;
    for (std::size_t s = 0; s < oracle.dim(); ++s)
        state_sum += pi_t[s] * oracle.states[s].mass_at(i) * oracle.states[s].mass_at(j);
    const double closed_form =
        m.mass(i) * m.mass(j) * std::exp(-phi(space.distance(m.location(i), m.location(j))) * t);
    if (std::abs(state_sum - closed_form) > 1e-8)
        throw OracleInconsistency("pair moment: state-sum disagrees with the closed form");
    return state_sum;
}

std::vector<std::pair<double, double>> law_of_f(const CTMCOracle& oracle, const MetricSpace& space,
                                                double t, const TestFunction& f) {
    const std::vector<double> pi_t = transient(oracle, t);
    std::vector<std::pair<double, double>> samples;
    samples.reserve(oracle.dim());
    for (std::size_t s = 0; s < oracle.dim(); ++s) {
        const OwnershipState& st = oracle.states[s];
        double value = 0.0;
        for (std::size_t b = 0; b < st.block_count(); ++b)
            value += st.block_mass[b] * f(space, oracle.measure->location(st.survivor[b]));
        samples.emplace_back(value, pi_t[s]);
    }
    std::sort(samples.begin(), samples.end());
    std::vector<std::pair<double, double>> law;
    for (const auto& [v, p] : samples) {
        if (!law.empty() && std::abs(law.back().first - v) <= 1e-12) law.back().second += p;
        else law.emplace_back(v, p);
    }
    return law;
}

std::string MeetingTree::repr() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t g = 0; g < zero_groups.size(); ++g) {
        if (g) os << "; ";
        for (std::size_t k = 0; k < zero_groups[g].size(); ++k) {
            if (k) os << ',';
            os << static_cast<int>(zero_groups[g][k]);
        }
    }
    os << " | ";
    for (std::size_t k = 0; k < merges.size(); ++k) {
        if (k) os << ", ";
        os << static_cast<int>(merges[k].first) << "->" << static_cast<int>(merges[k].second);
    }
    os << ')';
    return os.str();
}

namespace {

void extend_trees(const MeetingTree& base, std::vector<std::uint8_t> alive, std::vector<MeetingTree>& out) {
    out.push_back(base);
    // a merge needs a living loser l and a living lower winner w
    for (std::uint8_t l = 0; l < alive.size(); ++l) {
        if (!alive[l]) continue;
        for (std::uint8_t w = 0; w < l; ++w) {
            if (!alive[w]) continue;
            MeetingTree next = base;
            next.merges.emplace_back(l, w);
            std::vector<std::uint8_t> next_alive = alive;
            next_alive[l] = 0;
            extend_trees(next, std::move(next_alive), out);
        }
    }
}

}  // namespace

std::vector<MeetingTree> enumerate_meeting_trees(std::size_t n, const std::vector<int>& coincidence_pattern) {
    if (n < 1 || n > 3) throw CapacityError("meeting-tree enumeration supports 1 <= n <= 3 tokens");
    if (coincidence_pattern.size() != n) throw InvalidInput("coincidence pattern size mismatch");

    MeetingTree root;
    std::vector<std::uint8_t> alive(n, 1);
    std::map<int, std::vector<std::uint8_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[coincidence_pattern[i]].push_back(static_cast<std::uint8_t>(i));
    std::vector<std::vector<std::uint8_t>> zero_groups;
    for (auto& [label, members] : groups)
        if (members.size() >= 2) zero_groups.push_back(members);
    std::sort(zero_groups.begin(), zero_groups.end());
    root.zero_groups = zero_groups;
    for (const auto& g : root.zero_groups)
        for (std::size_t k = 1; k < g.size(); ++k) alive[g[k]] = 0;

    std::vector<MeetingTree> out;
    extend_trees(root, std::move(alive), out);
    std::sort(out.begin(), out.end());
    return out;
}

void write_transient_csv(const CTMCOracle& oracle, double t, const std::filesystem::path& path) {
    const std::vector<double> pi_t = transient(oracle, t);
    CsvWriter csv(path);
    csv.row({"state_id", "partition_repr", "survivors", "probability"});
    for (std::size_t s = 0; s < oracle.dim(); ++s)
        csv.row({std::to_string(s), oracle.states[s].repr(), oracle.states[s].survivors_repr(),
                 format_real(pi_t[s])});
}

}  // namespace mclab
