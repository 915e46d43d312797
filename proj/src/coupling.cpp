#include "mclab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mclab/coalescent.hpp"
#include "mclab/csv.hpp"
#include "mclab/errors.hpp"
#include "mclab/parallel.hpp"

namespace mclab {

void validate_plan(const TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    std::map<Point, double> from_sum, to_sum;
    for (const auto& e : plan.entries) {
        if (!(e.mass >= 0.0)) throw InvalidPlan("transport plan: joint masses must be nonnegative");
        from_sum[e.from] += e.mass;
        to_sum[e.to] += e.mass;
    }
    for (const auto& a : mu.atoms())
        if (std::abs(from_sum[a.location] - a.mass) > 1e-9)
            throw InvalidPlan("transport plan: first marginal does not match mu");
    for (const auto& a : nu.atoms())
        if (std::abs(to_sum[a.location] - a.mass) > 1e-9)
            throw InvalidPlan("transport plan: second marginal does not match nu");
    double total = 0.0;
    for (const auto& e : plan.entries) total += e.mass;
    if (std::abs(total - 1.0) > 1e-9) throw InvalidPlan("transport plan: total mass must be 1");
}

TransportPlan natural_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (mu.size() != nu.size()) throw InvalidPlan("natural plan needs equal atom counts");
    TransportPlan plan;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (std::abs(mu.mass(k) - nu.mass(k)) > 1e-9)
            throw InvalidPlan("natural plan needs matching atom masses");
        plan.entries.push_back({mu.location(k), nu.location(k), mu.mass(k)});
    }
    return plan;
}

void validate_params(const CouplingParams& p) {
    if (!(p.eps > 0.0) || !(p.d1 > 0.0) || !(p.d2 >= p.d1) || !(p.t_star > 0.0))
        throw InvalidInput("coupling params: need eps > 0, 0 < d1 <= d2, t_star > 0");
    if (p.eps > p.d1 / 5.0) throw InvalidInput("coupling params: eps must be <= d1 / 5");
}

CoupledExponentials couple_exponentials(double a, double b, RandomStream& rng) {
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidRate("couple_exponentials: rates must be positive");
    if (a == b) {
        double x;
        do {
            x = rng.exponential(a);
        } while (x == 0.0);
        return {x, x, true};
    }
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double beta = lo / hi;
    // overlap of the two densities; beta <= overlap, so a coupled mass of
    // beta * (normalized minimum density) fits under both marginals
    const double ratio = lo / hi;
    const double overlap = 1.0 - std::pow(ratio, lo / (hi - lo)) * (1.0 - ratio);

    const auto min_density = [&](double t) {
        return std::min(lo * std::exp(-lo * t), hi * std::exp(-hi * t));
    };
    const auto coupled_mass_density = [&](double t) { return beta / overlap * min_density(t); };

    if (rng.uniform() < beta) {
        // shared value from the normalized minimum density, rejection from Exp(lo)
        for (;;) {
            const double t = rng.exponential(lo);
            if (t == 0.0) continue;
            const double accept = min_density(t) / (lo * std::exp(-lo * t));
            if (rng.uniform() < accept) return {t, t, true};
        }
    }
    // independent residual draws, rejection from each marginal
    const auto residual_draw = [&](double rate) {
        for (;;) {
            const double t = rng.exponential(rate);
            if (t == 0.0) continue;
            const double accept = 1.0 - coupled_mass_density(t) / (rate * std::exp(-rate * t));
            if (rng.uniform() < accept) return t;
        }
    };
    return {residual_draw(a), residual_draw(b), false};
}

bool CoupledTokens::pair_coupled(std::size_t i, std::size_t j) const {
    if (i == j) throw InvalidInput("pair_coupled: need distinct indices");
    if (i > j) std::swap(i, j);
    const std::size_t n = mu_side.size();
    return clock_coupled[i * n - i * (i + 1) / 2 + (j - i - 1)] != 0;
}

CoupledTokens build_coupled(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const TransportPlan& plan,
                            std::size_t n, const CouplingParams& params, const MetricSpace& space,
                            const RateFunction& phi, RandomStream& rng) {
    validate_params(params);
    validate_plan(plan, mu, nu);
    if (n < 1 || n > TokenSystem::kDefaultCap) throw CapacityError("build_coupled: token count out of range");

    std::vector<Point> xi(n), xi_tilde(n);
    std::vector<double> weights;
    weights.reserve(plan.entries.size());
    for (const auto& e : plan.entries) weights.push_back(e.mass);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = plan.entries[rng.pick_index(weights)];
        xi[i] = e.from;
        xi_tilde[i] = e.to;
    }

    const std::size_t pairs = n * (n - 1) / 2;
    std::vector<double> clocks_mu(pairs, 0.0), clocks_nu(pairs, 0.0);
    std::vector<std::uint8_t> coupled_flags(pairs, 0);
    const std::uint64_t row_seed = rng.next_u64();

#pragma omp parallel for schedule(dynamic, 8) if (n >= 512)
    for (long long ii = 0; ii < static_cast<long long>(n) - 1; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        RandomStream row_rng = child_stream(row_seed, i, /*tag=*/2);
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::size_t at = i * n - i * (i + 1) / 2 + (j - i - 1);
            const bool mu_zero = xi[i] == xi[j];
            const bool nu_zero = xi_tilde[i] == xi_tilde[j];
            if (mu_zero && nu_zero) {
                coupled_flags[at] = 1;  // both instant, equal by construction
                continue;
            }
            if (mu_zero || nu_zero) {
                // no better-than-independent coupling against an instant merge
                const double d = mu_zero ? space.distance(xi_tilde[i], xi_tilde[j])
                                         : space.distance(xi[i], xi[j]);
                double t;
                do {
                    t = row_rng.exponential(phi(d));
                } while (t == 0.0);
                (mu_zero ? clocks_nu : clocks_mu)[at] = t;
                continue;
            }
            const double rate_mu = phi(space.distance(xi[i], xi[j]));
            const double rate_nu = phi(space.distance(xi_tilde[i], xi_tilde[j]));
            const CoupledExponentials ce = couple_exponentials(rate_mu, rate_nu, row_rng);
            clocks_mu[at] = ce.x;
            clocks_nu[at] = ce.y;
            coupled_flags[at] = ce.coupled ? 1 : 0;
        }
    }

    CoupledTokens out{TokenSystem::from_parts(space, phi, std::move(xi), std::move(clocks_mu)),
                      TokenSystem::from_parts(space, phi, std::move(xi_tilde), std::move(clocks_nu)),
                      std::move(coupled_flags)};
    return out;
}

GoodnessReport classify(const CoupledTokens& coupled, const CouplingParams& params) {
    validate_params(params);
    const TokenSystem& a = coupled.mu_side;
    const TokenSystem& b = coupled.nu_side;
    const std::size_t n = a.size();
    GoodnessReport r;
    r.g1 = r.g2 = r.g3 = r.g4 = r.g5 = r.g6 = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (a.space().distance(a.location(i), b.location(i)) > params.eps) r.g2 = false;
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool coincident = a.location(i) == a.location(j);
            const double da = a.space().distance(a.location(i), a.location(j));
            const double db = a.space().distance(b.location(i), b.location(j));
            if (!coincident && da < params.d1) r.g1 = false;
            if (!coincident && a.clock(i, j) != b.clock(i, j)) r.g3 = false;
            if (!coincident && a.clock(i, j) < params.t_star) r.g4 = false;
            if (coincident && b.clock(i, j) > params.t_star) r.g5 = false;
            if (da > params.d2 || db > params.d2) r.g6 = false;
        }
    }
    r.good = r.g1 && r.g2 && r.g3 && r.g4 && r.g5 && r.g6;
    return r;
}

namespace {

double empirical_f(const TokenSystem& sys, PartitionCursor& cursor, const TestFunction& f) {
    double acc = 0.0;
    const std::size_t n = sys.size();
    for (std::size_t i = 0; i < n; ++i)
        acc += f(sys.space(), sys.location(cursor.owner(static_cast<std::uint32_t>(i))));
    return acc / static_cast<double>(n);
}

}  // namespace

double sup_diff(const CoupledTokens& coupled, const TestFunction& f, double from_t, double horizon) {
    if (!(from_t >= 0.0) || !(horizon >= from_t)) throw InvalidInput("sup_diff: need 0 <= from_t <= horizon");

    // change points: nontrivial meeting times of either side in (from_t, horizon]
    std::vector<double> times;
    for (const TokenSystem* sys : {&coupled.mu_side, &coupled.nu_side}) {
        PartitionCursor probe(*sys);
        probe.advance_to(from_t);
        while (auto ev = probe.advance_next_event()) {
            if (ev->time > horizon) break;
            times.push_back(ev->time);
        }
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    PartitionCursor ca(coupled.mu_side), cb(coupled.nu_side);
    ca.advance_to(from_t);
    cb.advance_to(from_t);
    double sup = std::abs(empirical_f(coupled.mu_side, ca, f) - empirical_f(coupled.nu_side, cb, f));
    for (double t : times) {
        ca.advance_to(t);
        cb.advance_to(t);
        sup = std::max(sup, std::abs(empirical_f(coupled.mu_side, ca, f) - empirical_f(coupled.nu_side, cb, f)));
    }
    return sup;
}

std::vector<FellerRow> feller_demo(const DiscreteMeasure& mu, const std::vector<DiscreteMeasure>& nu_sequence,
                                   const std::vector<double>& displacements, const TestFunction& f, double t,
                                   const MetricSpace& space, const RateFunction& phi, std::size_t replicates,
                                   std::uint64_t seed, int threads) {
    if (nu_sequence.size() != displacements.size())
        throw InvalidInput("feller_demo: need one displacement per measure");

    const auto moments = [&](const DiscreteMeasure& m, std::uint64_t tag) {
        const auto values = run_replicates<std::pair<double, double>>(
            replicates,
            [&](std::size_t k) {
                RandomStream rng = child_stream(seed, k, tag);
                const Trajectory traj = run(m, phi, space, t, rng);
                double v = 0.0;
                for (const auto& atom : traj.final_state.measure.atoms())
                    v += atom.mass * f(space, atom.location);
                return std::make_pair(v, v * v);
            },
            threads);
        std::vector<double> first(replicates), second(replicates);
        for (std::size_t k = 0; k < replicates; ++k) {
            first[k] = values[k].first;
            second[k] = values[k].second;
        }
        return std::make_pair(pairwise_mean_var(first), pairwise_mean_var(second));
    };

    const auto [mu_first, mu_second] = moments(mu, 900);
    std::vector<FellerRow> rows;
    for (std::size_t s = 0; s < nu_sequence.size(); ++s) {
        const auto [nu_first, nu_second] = moments(nu_sequence[s], 901 + s);
        FellerRow row;
        row.displacement = displacements[s];
        row.mean_gap = std::abs(mu_first.mean - nu_first.mean);
        row.mean_gap_se = std::sqrt(mu_first.stderr_of_mean() * mu_first.stderr_of_mean() +
                                    nu_first.stderr_of_mean() * nu_first.stderr_of_mean());
        row.second_moment_gap = std::abs(mu_second.mean - nu_second.mean);
        row.second_moment_gap_se = std::sqrt(mu_second.stderr_of_mean() * mu_second.stderr_of_mean() +
                                             nu_second.stderr_of_mean() * nu_second.stderr_of_mean());
        rows.push_back(row);
    }
    return rows;
}

void write_goodness_csv(const std::vector<GoodnessTally>& rows, const std::filesystem::path& path) {
    CsvWriter csv(path);
    csv.row({"replicate", "g1", "g2", "g3", "g4", "g5", "g6", "good", "sup_diff"});
    const auto flag = [](bool b) { return std::string(b ? "1" : "0"); };
    for (const auto& r : rows)
        csv.row({std::to_string(r.replicate), flag(r.report.g1), flag(r.report.g2), flag(r.report.g3),
                 flag(r.report.g4), flag(r.report.g5), flag(r.report.g6), flag(r.report.good),
                 format_real(r.sup_diff_value)});
}

}  // namespace mclab
