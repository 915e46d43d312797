#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mclab/measure.hpp"
#include "mclab/rate.hpp"
#include "mclab/stats.hpp"

namespace mclab {

struct ExperimentResult {
    std::string name;
    std::vector<std::pair<std::string, std::string>> params;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, double>> scalars;
    std::vector<std::pair<std::string, bool>> verdicts;

    double scalar(const std::string& key) const;
    bool verdict(const std::string& key) const;
};

// writes <name>.csv and <name>.meta.json into out_dir
void write_experiment(const ExperimentResult& result, const std::filesystem::path& out_dir);

// The bounded-rate Feller failure: mu^(n) = (1/3)(d(0) + d(1) + d(x_n)) on
// [0,1] with f(x) = max(0, 2x - 1). Simulated law of mu_t(f) over
// {0, 1/3, 2/3, 1} against the exact oracle law, the analytic lower bound on
// P(mu_t(f) = 2/3), and the limit measure's law (zero mass at 2/3).
ExperimentResult bounded_phi_counterexample(const RateFunction& phi, double x_n, double t,
                                            const TestConfig& cfg);

// Sparse atoms on the line with phi(d(s_i, s_j)) <= r_max(i,j): the total
// meeting rate is at most q_hat = sum 2(i-1) r_i, so P(no meeting by t) >=
// exp(-q_hat t). Greedy placement, verified pair-by-pair after construction.
ExperimentResult sparse_support(const std::function<double(std::size_t)>& r_rule, std::size_t n_atoms,
                                double t, const RateFunction& phi, const TestConfig& cfg);

inline double inverse_cube_rule(std::size_t i) {
    const double x = static_cast<double>(i);
    return 1.0 / (x * x * x);
}

// columns (t, mean alive count, stderr, 2/(t phi_min), verdict)
ExperimentResult kingman_sweep(const InitialMeasure& measure, const std::vector<Point>& witness_cloud,
                               const std::function<bool(const Point&)>& region,
                               const std::vector<double>& t_grid, const MetricSpace& space,
                               const RateFunction& phi, const TestConfig& cfg);

// columns (N, mean d_TV(mu^N_t, mu^2N_t) over coupled prefixes, stderr)
ExperimentResult tv_convergence(const InitialMeasure& measure, double t, const std::vector<std::size_t>& n_grid,
                                const MetricSpace& space, const RateFunction& phi, const TestConfig& cfg);

}  // namespace mclab
