#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace mclab::acceptance {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double seconds = 0.0;        // wall time, reported but kept out of the summary JSON
    double limit_seconds = 0.0;  // 0 = no stated limit
    nlohmann::ordered_json metrics;
};

struct SuiteResult {
    std::vector<CriterionResult> criteria;
    bool all_pass = false;
    std::string summary_json;  // canonical, timing-free, byte-stable across thread counts
};

// Criteria 1-12 at the given replicate scale (1.0 = the stated counts,
// minimum 100 per check). Results are independent of `threads`.
std::vector<CriterionResult> run_criteria(std::uint64_t seed, double sigma, double scale, int threads);

// canonical timing-free JSON for a set of criterion results
std::string summary_json(std::uint64_t seed, double sigma, double scale,
                         const std::vector<CriterionResult>& criteria);

// Full suite: criteria 1-12 once with `threads`, then criterion 13
// (determinism) re-runs them with a different thread count and byte-compares
// the canonical summaries.
SuiteResult run_suite(std::uint64_t seed, double sigma, double scale, int threads);

}  // namespace mclab::acceptance
