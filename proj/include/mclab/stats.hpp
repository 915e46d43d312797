#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mclab/coalescent.hpp"
#include "mclab/measure.hpp"
#include "mclab/oracle.hpp"
#include "mclab/test_function.hpp"
#include "mclab/tokens.hpp"

namespace mclab {

struct TestConfig {
    std::size_t replicates = 10000;  // >= 100
    std::uint64_t base_seed = 0;
    double sigma = 4.0;  // pass threshold in standard errors
    std::vector<double> time_grid;
    int threads = 0;        // <0 selects the serial reference runner
    std::size_t n_tokens = 512;  // token-system size for continuous-measure paths
};

enum class TargetKind { Point, UpperBound };

struct EstimatorReport {
    std::string check;
    double estimate = 0.0;
    double stderr_ = 0.0;
    double target = 0.0;
    double z = 0.0;
    std::size_t replicates = 0;
    TargetKind kind = TargetKind::Point;
    bool pass = false;
    std::string note;
};

// z and verdict from the raw numbers; point targets pass iff |z| <= sigma,
// upper bounds iff estimate <= target + sigma * stderr
EstimatorReport make_report(std::string check, double estimate, double stderr_, double target,
                            std::size_t replicates, double sigma, TargetKind kind = TargetKind::Point,
                            std::string note = {});

struct ChiSquareReport {
    std::string check;
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 0.0;
    std::size_t replicates = 0;
    bool pass = false;  // p > 0.001
};

double normal_cdf(double z);
// Wilson-Hilferty cube-root normal approximation, adequate for dof <= 10
double chi_square_p_value(double statistic, std::size_t dof);

// exact mu_0(f): atomic sum, box/coordinate midpoint, 1-d box/piecewise-linear
double initial_mean(const InitialMeasure& measure, const TestFunction& f, const MetricSpace& space);

// (1/2) E (1 - exp(-phi(d(xi1, xi2)) t)) (f(xi1) - f(xi2))^2 with xi IID from
// the measure: exact double sum for atomic, fresh-pair Monte Carlo otherwise
struct ValueWithError {
    double value = 0.0;
    double stderr_ = 0.0;
};
ValueWithError quadratic_variation_rhs(const InitialMeasure& measure, const TestFunction& f, double t,
                                       const MetricSpace& space, const RateFunction& phi,
                                       std::uint64_t seed, std::size_t pair_samples = 1000000);

EstimatorReport check_martingale(const InitialMeasure& measure, const TestFunction& f, double t,
                                 const MetricSpace& space, const RateFunction& phi, const TestConfig& cfg);

EstimatorReport check_quadratic_variation(const InitialMeasure& measure, const TestFunction& f, double t,
                                          const MetricSpace& space, const RateFunction& phi,
                                          const TestConfig& cfg);

EstimatorReport check_pair_moment(const DiscreteMeasure& measure, std::size_t i, std::size_t j, double t,
                                  const MetricSpace& space, const RateFunction& phi, const TestConfig& cfg);

// probability that the precedence order restricted to `ordering` is exactly
// `ordering`; target is the size-biased product formula over that subset
EstimatorReport check_sbo(const DiscreteMeasure& measure, const std::vector<std::size_t>& ordering,
                          const TestConfig& cfg);

EstimatorReport check_kingman_bound(const InitialMeasure& measure, const std::function<bool(const Point&)>& region,
                                    const std::vector<Point>& witness_cloud, double t, const MetricSpace& space,
                                    const RateFunction& phi, const TestConfig& cfg);

ChiSquareReport check_coalescence_law(const DiscreteMeasure& measure, const MetricSpace& space,
                                      const RateFunction& phi, const TestConfig& cfg);

struct DustRow {
    std::size_t n_tokens = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
};
struct DustTable {
    std::vector<DustRow> rows;
    bool non_increasing = false;  // within 2 pooled stderr along the grid
};
DustTable check_dust(const InitialMeasure& measure, double t, const std::vector<std::size_t>& n_grid,
                     const MetricSpace& space, const RateFunction& phi, const TestConfig& cfg);

void write_reports_csv(const std::vector<EstimatorReport>& reports, const std::filesystem::path& path);
// full-fidelity export: every report field, one JSON object per check
void write_reports_json(const std::vector<EstimatorReport>& reports, const std::filesystem::path& path);

}  // namespace mclab
