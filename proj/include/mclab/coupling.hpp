#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mclab/measure.hpp"
#include "mclab/rate.hpp"
#include "mclab/rng.hpp"
#include "mclab/test_function.hpp"
#include "mclab/tokens.hpp"

namespace mclab {

// The coupling of two token processes: shared initial-location randomness
// through an explicit transport plan, meeting clocks coupled pairwise so
// that P(t_ij != t~_ij) = 1 - min(rate)/max(rate) exactly.

struct TransportPlan {
    struct Entry {
        Point from, to;
        double mass = 0.0;
    };
    std::vector<Entry> entries;
};

// joint masses >= 0, marginals reproduce mu and nu within 1e-9
void validate_plan(const TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// pairs atom k of mu with atom k of nu (equal atom counts and masses)
TransportPlan natural_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct CouplingParams {
    double eps = 0.0;     // > 0, <= d1 / 5
    double d1 = 0.0;      // > 0
    double d2 = 0.0;      // >= d1
    double t_star = 0.0;  // > 0
};
void validate_params(const CouplingParams& params);

struct CoupledExponentials {
    double x = 0.0, y = 0.0;
    bool coupled = false;  // x == y by construction
};

// Marginals Exp(a) and Exp(b); with probability min(a,b)/max(a,b) both draws
// are the same value from the normalized minimum density, otherwise they are
// independent draws from the residual densities (rejection from the
// dominating exponential, expected <= 4 proposals per call).
CoupledExponentials couple_exponentials(double a, double b, RandomStream& rng);

struct CoupledTokens {
    TokenSystem mu_side;
    TokenSystem nu_side;
    std::vector<std::uint8_t> clock_coupled;  // upper-tri flags, t_ij == t~_ij by construction

    bool pair_coupled(std::size_t i, std::size_t j) const;
};

CoupledTokens build_coupled(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const TransportPlan& plan,
                            std::size_t n, const CouplingParams& params, const MetricSpace& space,
                            const RateFunction& phi, RandomStream& rng);

struct GoodnessReport {
    bool g1 = false;  // mu-side spacing: coincident or >= d1 apart
    bool g2 = false;  // per-token displacement <= eps
    bool g3 = false;  // non-coincident pairs share clocks
    bool g4 = false;  // non-coincident clocks >= t_star
    bool g5 = false;  // nu-side clocks of mu-coincident pairs <= t_star
    bool g6 = false;  // both diameters <= d2
    bool good = false;
};

GoodnessReport classify(const CoupledTokens& coupled, const CouplingParams& params);

// exact sup of |mu^N_t(f) - nu^N_t(f)| over [from_t, horizon]; paths are
// piecewise constant so the sup is attained at from_t or at an event time of
// either side. horizon = infinity runs to joint absorption.
double sup_diff(const CoupledTokens& coupled, const TestFunction& f, double from_t, double horizon);

struct FellerRow {
    double displacement = 0.0;
    double mean_gap = 0.0;        // |E mu_t(f) - E nu_t(f)| estimate
    double mean_gap_se = 0.0;
    double second_moment_gap = 0.0;  // |E mu_t(f)^2 - E nu_t(f)^2| estimate
    double second_moment_gap_se = 0.0;
};

// Gap table for a sequence of perturbed measures. The first-moment column is
// flat by the martingale property; the second-moment column is the
// Feller-continuity probe (moment convergence <=> weak convergence of the
// random measures).
std::vector<FellerRow> feller_demo(const DiscreteMeasure& mu, const std::vector<DiscreteMeasure>& nu_sequence,
                                   const std::vector<double>& displacements, const TestFunction& f, double t,
                                   const MetricSpace& space, const RateFunction& phi, std::size_t replicates,
                                   std::uint64_t seed, int threads = 0);

struct GoodnessTally {
    std::size_t replicate = 0;
    GoodnessReport report;
    double sup_diff_value = 0.0;
};
void write_goodness_csv(const std::vector<GoodnessTally>& rows, const std::filesystem::path& path);

}  // namespace mclab
