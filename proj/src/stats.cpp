#include "mclab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fstream>

#include <json.hpp>

#include "mclab/csv.hpp"
#include "mclab/errors.hpp"
#include "mclab/parallel.hpp"

namespace mclab {

namespace {

// per-check stream tags so checks sharing a base seed stay independent
enum StreamTag : std::uint64_t {
    kMartingale = 101,
    kQuadraticVariation = 102,
    kQvRhsPairs = 103,
    kPairMoment = 104,
    kSbo = 105,
    kKingman = 106,
    kCoalescenceLaw = 107,
    kDust = 108,
};

void require_config(const TestConfig& cfg) {
    if (cfg.replicates < 100) throw InvalidInput("test config: need at least 100 replicates");
    if (!(cfg.sigma > 0.0)) throw InvalidInput("test config: sigma multiplier must be positive");
}

double measure_integral(const DiscreteMeasure& m, const TestFunction& f, const MetricSpace& space) {
    double acc = 0.0;
    for (const auto& a : m.atoms()) acc += a.mass * f(space, a.location);
    return acc;
}

// mass at the original atom locations after a run stopped at its horizon
std::vector<double> masses_by_original_index(const Trajectory& t, std::size_t n_atoms) {
    std::vector<double> masses(n_atoms, 0.0);
    for (std::size_t k = 0; k < t.surviving_indices.size(); ++k)
        masses[t.surviving_indices[k]] = t.final_state.measure.mass(k);
    return masses;
}

double oracle_mean_of_f(const CTMCOracle& oracle, const MetricSpace& space, const TestFunction& f, double t) {
    double acc = 0.0;
    for (const auto& [value, prob] : law_of_f(oracle, space, t, f)) acc += value * prob;
    return acc;
}

double oracle_qv(const CTMCOracle& oracle, const MetricSpace& space, const TestFunction& f, double t,
                 double mu0_f) {
    double acc = 0.0;
    for (const auto& [value, prob] : law_of_f(oracle, space, t, f))
        acc += prob * (value - mu0_f) * (value - mu0_f);
    return acc;
}

}  // namespace

EstimatorReport make_report(std::string check, double estimate, double stderr_, double target,
                            std::size_t replicates, double sigma, TargetKind kind, std::string note) {
    EstimatorReport r;
    r.check = std::move(check);
    r.estimate = estimate;
    r.stderr_ = stderr_;
    r.target = target;
    r.replicates = replicates;
    r.kind = kind;
    r.note = std::move(note);
    if (stderr_ > 0.0) {
        r.z = (estimate - target) / stderr_;
    } else {
        r.z = estimate == target ? 0.0
                                 : std::copysign(std::numeric_limits<double>::infinity(), estimate - target);
    }
    if (kind == TargetKind::Point) {
        r.pass = std::abs(r.z) <= sigma;
    } else {
        r.pass = stderr_ > 0.0 ? estimate <= target + sigma * stderr_ : estimate <= target;
        if (stderr_ == 0.0) r.z = estimate <= target ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return r;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double chi_square_p_value(double statistic, std::size_t dof) {
    if (dof == 0) throw InvalidInput("chi-square needs dof >= 1");
    if (statistic <= 0.0) return 1.0;
    const double k = static_cast<double>(dof);
    const double c = 2.0 / (9.0 * k);
    const double z = (std::cbrt(statistic / k) - (1.0 - c)) / std::sqrt(c);
    return 1.0 - normal_cdf(z);
}

double initial_mean(const InitialMeasure& measure, const TestFunction& f, const MetricSpace& space) {
    if (measure.is_atomic()) return measure_integral(measure.as_atomic(), f, space);
    if (const UniformBox* box = measure.as_box()) {
        if (const auto axis = f.projection_axis()) {
            if (*axis >= box->lo.size()) throw InvalidInput("initial_mean: projection axis outside the box");
            return 0.5 * (box->lo[*axis] + box->hi[*axis]);
        }
        if (const auto* knots = f.linear_knots(); knots && box->lo.size() == 1) {
            // exact trapezoid integration of the piecewise-linear function
            // over the (1-d) box; the box must stay inside the knot span
            const double lo = box->lo[0], hi = box->hi[0];
            if (lo < knots->front().first - 1e-12 || hi > knots->back().first + 1e-12)
                throw InvalidInput("initial_mean: box leaves the knot span");
            const MetricSpace line = MetricSpace::interval();
            double integral = 0.0;
            double prev_x = lo, prev_y = f(line, Point::scalar(lo));
            for (const auto& [x, y] : *knots) {
                if (x <= lo || x >= hi) continue;
                integral += 0.5 * (prev_y + y) * (x - prev_x);
                prev_x = x;
                prev_y = y;
            }
            const double end_y = f(line, Point::scalar(hi));
            integral += 0.5 * (prev_y + end_y) * (hi - prev_x);
            return integral / (hi - lo);
        }
    }
    if (f.is_constant()) {
        RandomStream probe(1);
        return f(space, measure.sample(probe));
    }
    throw InvalidInput("initial_mean: no closed form for this measure/function pair");
}

ValueWithError quadratic_variation_rhs(const InitialMeasure& measure, const TestFunction& f, double t,
                                       const MetricSpace& space, const RateFunction& phi,
                                       std::uint64_t seed, std::size_t pair_samples) {
    const auto integrand = [&](const Point& x, const Point& y) {
        if (x == y) return 0.0;
        const double df = f(space, x) - f(space, y);
        return (1.0 - std::exp(-phi(space.distance(x, y)) * t)) * df * df;
    };
    if (measure.is_atomic()) {
        const DiscreteMeasure& m = measure.as_atomic();
        double acc = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t j = i + 1; j < m.size(); ++j)
                acc += m.mass(i) * m.mass(j) * integrand(m.location(i), m.location(j));
        return {acc, 0.0};  // unordered pairs already carry the 1/2
    }
    RandomStream rng = child_stream(seed, 0, kQvRhsPairs);
    std::vector<double> values(pair_samples);
    for (auto& v : values) {
        const Point x = measure.sample(rng);
        const Point y = measure.sample(rng);
        v = 0.5 * integrand(x, y);
    }
    const MeanVar mv = pairwise_mean_var(values);
    return {mv.mean, mv.stderr_of_mean()};
}

EstimatorReport check_martingale(const InitialMeasure& measure, const TestFunction& f, double t,
                                 const MetricSpace& space, const RateFunction& phi, const TestConfig& cfg) {
    require_config(cfg);
    const double target = initial_mean(measure, f, space);

    if (measure.is_atomic()) {
        const DiscreteMeasure& m = measure.as_atomic();
        if (m.size() <= 4) {
            // target must agree with the exact oracle before any simulation
            const CTMCOracle oracle = build_generator(enumerate_states(m), m, space, phi);
            if (std::abs(oracle_mean_of_f(oracle, space, f, t) - target) > 1e-8)
                throw OracleInconsistency("martingale target disagrees with the CTMC oracle");
        }
        const auto values = run_replicates<double>(
            cfg.replicates,
            [&](std::size_t k) {
                RandomStream rng = child_stream(cfg.base_seed, k, kMartingale);
                const Trajectory traj = run(m, phi, space, t, rng);
                return measure_integral(traj.final_state.measure, f, space);
            },
            cfg.threads);
        const MeanVar mv = pairwise_mean_var(values);
        return make_report("martingale", mv.mean, mv.stderr_of_mean(), target, cfg.replicates, cfg.sigma);
    }

    const auto values = run_replicates<double>(
        cfg.replicates,
        [&](std::size_t k) {
            RandomStream rng = child_stream(cfg.base_seed, k, kMartingale);
            const TokenSystem sys = TokenSystem::init(measure, cfg.n_tokens, space, phi, rng);
            PartitionState st = evolve(sys, t);
            return measure_integral(empirical_measure(sys, st), f, space);
        },
        cfg.threads);
    const MeanVar mv = pairwise_mean_var(values);
    return make_report("martingale", mv.mean, mv.stderr_of_mean(), target, cfg.replicates, cfg.sigma,
                       TargetKind::Point, "token path, N=" + std::to_string(cfg.n_tokens));
}

EstimatorReport check_quadratic_variation(const InitialMeasure& measure, const TestFunction& f, double t,
                                          const MetricSpace& space, const RateFunction& phi,
                                          const TestConfig& cfg) {
    require_config(cfg);
    const ValueWithError rhs = quadratic_variation_rhs(measure, f, t, space, phi, cfg.base_seed);

    if (measure.is_atomic()) {
        const DiscreteMeasure& m = measure.as_atomic();
        const double mu0_f = measure_integral(m, f, space);
        if (m.size() <= 4) {
            const CTMCOracle oracle = build_generator(enumerate_states(m), m, space, phi);
            if (std::abs(oracle_qv(oracle, space, f, t, mu0_f) - rhs.value) > 1e-8)
                throw OracleInconsistency("quadratic-variation target disagrees with the CTMC oracle");
        }
        const auto values = run_replicates<double>(
            cfg.replicates,
            [&](std::size_t k) {
                RandomStream rng = child_stream(cfg.base_seed, k, kQuadraticVariation);
                const Trajectory traj = run(m, phi, space, t, rng);
                const double d = measure_integral(traj.final_state.measure, f, space) - mu0_f;
                return d * d;
            },
            cfg.threads);
        const MeanVar mv = pairwise_mean_var(values);
        const double pooled = std::sqrt(mv.stderr_of_mean() * mv.stderr_of_mean() + rhs.stderr_ * rhs.stderr_);
        return make_report("quadratic_variation", mv.mean, pooled, rhs.value, cfg.replicates, cfg.sigma);
    }

    // token path: exact finite-N factor (1 - 1/N) on the limit RHS
    const double factor = 1.0 - 1.0 / static_cast<double>(cfg.n_tokens);
    const auto values = run_replicates<double>(
        cfg.replicates,
        [&](std::size_t k) {
            RandomStream rng = child_stream(cfg.base_seed, k, kQuadraticVariation);
            const TokenSystem sys = TokenSystem::init(measure, cfg.n_tokens, space, phi, rng);
            double mu0 = 0.0;
            for (std::size_t i = 0; i < sys.size(); ++i) mu0 += f(space, sys.location(i));
            mu0 /= static_cast<double>(sys.size());
            PartitionState st = evolve(sys, t);
            const double d = measure_integral(empirical_measure(sys, st), f, space) - mu0;
            return d * d;
        },
        cfg.threads);
    const MeanVar mv = pairwise_mean_var(values);
    const double pooled =
        std::sqrt(mv.stderr_of_mean() * mv.stderr_of_mean() + factor * factor * rhs.stderr_ * rhs.stderr_);
    return make_report("quadratic_variation", mv.mean, pooled, factor * rhs.value, cfg.replicates, cfg.sigma,
                       TargetKind::Point, "token path, N=" + std::to_string(cfg.n_tokens));
}

EstimatorReport check_pair_moment(const DiscreteMeasure& measure, std::size_t i, std::size_t j, double t,
                                  const MetricSpace& space, const RateFunction& phi, const TestConfig& cfg) {
    require_config(cfg);
    if (i == j || i >= measure.size() || j >= measure.size())
        throw InvalidInput("check_pair_moment: need two distinct atom indices");
    const double d = space.distance(measure.location(i), measure.location(j));
    const double target = measure.mass(i) * measure.mass(j) * std::exp(-phi(d) * t);
    if (measure.size() <= 4) {
        const CTMCOracle oracle = build_generator(enumerate_states(measure), measure, space, phi);
        // exact_pair_moment cross-asserts state-sum vs closed form internally
        if (std::abs(exact_pair_moment(oracle, space, phi, i, j, t) - target) > 1e-8)
            throw OracleInconsistency("pair-moment target disagrees with the CTMC oracle");
    }
    const auto values = run_replicates<double>(
        cfg.replicates,
        [&](std::size_t k) {
            RandomStream rng = child_stream(cfg.base_seed, k, kPairMoment);
            const Trajectory traj = run(measure, phi, space, t, rng);
            const auto masses = masses_by_original_index(traj, measure.size());
            return masses[i] * masses[j];
        },
        cfg.threads);
    const MeanVar mv = pairwise_mean_var(values);
    return make_report("pair_moment", mv.mean, mv.stderr_of_mean(), target, cfg.replicates, cfg.sigma);
}

EstimatorReport check_sbo(const DiscreteMeasure& measure, const std::vector<std::size_t>& ordering,
                          const TestConfig& cfg) {
    require_config(cfg);
    if (ordering.size() < 2) throw InvalidInput("check_sbo: ordering needs at least two atoms");
    std::vector<bool> listed(measure.size(), false);
    for (std::size_t idx : ordering) {
        if (idx >= measure.size() || listed[idx]) throw InvalidInput("check_sbo: ordering indices must be distinct atoms");
        listed[idx] = true;
    }

    // size-biased product formula over the listed subset
    double target = 1.0;
    double suffix = 0.0;
    for (auto it = ordering.rbegin(); it != ordering.rend(); ++it) {
        suffix += measure.mass(*it);
        target *= measure.mass(*it) / suffix;
    }

    // The precedence order is the first-hit order of atoms under IID
    // sampling of the initial measure (the token ranking); merge winners are
    // determined by this ranking, so its law is the winner-precedence law.
    const InitialMeasure atomic = InitialMeasure::atomic(measure);
    const auto hits = run_replicates<int>(
        cfg.replicates,
        [&](std::size_t k) {
            RandomStream rng = child_stream(cfg.base_seed, k, kSbo);
            std::vector<bool> seen(measure.size(), false);
            std::vector<std::size_t> order;
            std::size_t remaining = ordering.size();
            for (std::size_t draws = 0; remaining > 0; ++draws) {
                if (draws > 10000000) throw DegenerateState("check_sbo: first-hit sampling did not terminate");
                const Point p = atomic.sample(rng);
                for (std::size_t a = 0; a < measure.size(); ++a) {
                    if (measure.location(a) == p && !seen[a]) {
                        seen[a] = true;
                        if (listed[a]) {
                            order.push_back(a);
                            --remaining;
                        }
                        break;
                    }
                }
            }
            return order == ordering ? 1 : 0;
        },
        cfg.threads);
    std::size_t hits_count = 0;
    for (int h : hits) hits_count += static_cast<std::size_t>(h);
    const double p_hat = static_cast<double>(hits_count) / static_cast<double>(cfg.replicates);
    const double se = std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(cfg.replicates));
    return make_report("sbo", p_hat, se, target, cfg.replicates, cfg.sigma);
}

EstimatorReport check_kingman_bound(const InitialMeasure& measure, const std::function<bool(const Point&)>& region,
                                    const std::vector<Point>& witness_cloud, double t, const MetricSpace& space,
                                    const RateFunction& phi, const TestConfig& cfg) {
    require_config(cfg);
    if (!(t > 0.0)) throw InvalidInput("check_kingman_bound: need t > 0");
    const double bound = 2.0 / (t * phi_min(space, phi, witness_cloud));
    const auto values = run_replicates<double>(
        cfg.replicates,
        [&](std::size_t k) {
            RandomStream rng = child_stream(cfg.base_seed, k, kKingman);
            const TokenSystem sys = TokenSystem::init(measure, cfg.n_tokens, space, phi, rng);
            PartitionState st = evolve(sys, t);
            return static_cast<double>(count_alive_in(st, sys, region));
        },
        cfg.threads);
    const MeanVar mv = pairwise_mean_var(values);
    return make_report("kingman_bound", mv.mean, mv.stderr_of_mean(), bound, cfg.replicates, cfg.sigma,
                       TargetKind::UpperBound, "t=" + format_real(t));
}

ChiSquareReport check_coalescence_law(const DiscreteMeasure& measure, const MetricSpace& space,
                                      const RateFunction& phi, const TestConfig& cfg) {
    require_config(cfg);
    const LocationLaw law = final_location_law(measure, phi, space, cfg.replicates,
                                               mix64(cfg.base_seed ^ kCoalescenceLaw), cfg.threads);
    double stat = 0.0;
    const double r = static_cast<double>(cfg.replicates);
    for (std::size_t a = 0; a < measure.size(); ++a) {
        const double expected = r * measure.mass(a);
        const double diff = static_cast<double>(law.count[a]) - expected;
        stat += diff * diff / expected;
    }
    ChiSquareReport rep;
    rep.check = "coalescence_law";
    rep.statistic = stat;
    rep.dof = measure.size() - 1;
    rep.replicates = cfg.replicates;
    if (rep.dof == 0) {
        rep.p_value = 1.0;  // point mass: trivially passes
        rep.pass = true;
        return rep;
    }
    rep.p_value = chi_square_p_value(stat, rep.dof);
    rep.pass = rep.p_value > 0.001;
    return rep;
}

DustTable check_dust(const InitialMeasure& measure, double t, const std::vector<std::size_t>& n_grid,
                     const MetricSpace& space, const RateFunction& phi, const TestConfig& cfg) {
    require_config(cfg);
    if (!(t > 0.0)) throw InvalidInput("check_dust: need t > 0");
    DustTable table;
    for (std::size_t n : n_grid) {
        const auto values = run_replicates<double>(
            cfg.replicates,
            [&](std::size_t k) {
                RandomStream rng = child_stream(cfg.base_seed ^ n, k, kDust);
                const TokenSystem sys = TokenSystem::init(measure, n, space, phi, rng);
                PartitionState st = evolve(sys, t);
                return dust_fraction(st);
            },
            cfg.threads);
        const MeanVar mv = pairwise_mean_var(values);
        table.rows.push_back({n, mv.mean, mv.stderr_of_mean()});
    }
    table.non_increasing = true;
    for (std::size_t k = 1; k < table.rows.size(); ++k) {
        const double slack = 2.0 * std::sqrt(table.rows[k - 1].stderr_ * table.rows[k - 1].stderr_ +
                                             table.rows[k].stderr_ * table.rows[k].stderr_);
        if (table.rows[k].mean > table.rows[k - 1].mean + slack) table.non_increasing = false;
    }
    return table;
}

void write_reports_csv(const std::vector<EstimatorReport>& reports, const std::filesystem::path& path) {
    CsvWriter csv(path);
    csv.row({"check", "estimate", "stderr", "target", "z", "verdict"});
    for (const auto& r : reports)
        csv.row({r.check, format_real(r.estimate), format_real(r.stderr_), format_real(r.target),
                 format_real(r.z), r.pass ? "pass" : "fail"});
}

void write_reports_json(const std::vector<EstimatorReport>& reports, const std::filesystem::path& path) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json entry;
        entry["check"] = r.check;
        entry["estimate"] = r.estimate;
        entry["stderr"] = r.stderr_;
        entry["target"] = r.target;
        entry["target_kind"] = r.kind == TargetKind::Point ? "point" : "upper_bound";
        entry["z"] = r.z;
        entry["replicates"] = r.replicates;
        entry["verdict"] = r.pass ? "pass" : "fail";
        if (!r.note.empty()) entry["note"] = r.note;
        doc.push_back(std::move(entry));
    }
    std::ofstream out(path);
    if (!out) throw IOError("cannot write report JSON: " + path.string());
    out << doc.dump(2) << '\n';
}

}  // namespace mclab
