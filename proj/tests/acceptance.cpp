// Acceptance suite runner: executes every criterion at the stated replicate
// counts and tolerances, prints one pass/fail line per criterion (with wall
// time against the stated budget), and exits nonzero on any failure.
//
// Criterion 13 (determinism) is part of the suite: the full criterion set is
// evaluated twice with different thread counts and the canonical summaries
// must be byte-identical.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "mclab/acceptance.hpp"

int main(int argc, char** argv) {
    std::uint64_t seed = 0;
    double sigma = 4.0;
    double scale = 1.0;
    for (int a = 1; a + 1 < argc; a += 2) {
        const std::string flag = argv[a];
        if (flag == "--seed") seed = std::strtoull(argv[a + 1], nullptr, 10);
        else if (flag == "--sigma") sigma = std::strtod(argv[a + 1], nullptr);
        else if (flag == "--scale") scale = std::strtod(argv[a + 1], nullptr);
    }

    const mclab::acceptance::SuiteResult suite = mclab::acceptance::run_suite(seed, sigma, scale, 0);

    bool ok = true;
    for (const auto& c : suite.criteria) {
        const bool in_budget = c.limit_seconds == 0.0 || c.seconds < c.limit_seconds;
        std::printf("[%s] %2d %-28s %7.2fs%s\n", c.pass && in_budget ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), c.seconds,
                    in_budget ? "" : " (over the stated runtime budget)");
        ok = ok && c.pass && in_budget;
    }
    std::printf("%s\n", ok ? "ACCEPTANCE: all criteria pass" : "ACCEPTANCE: FAILURES PRESENT");
    return ok ? 0 : 1;
}
