// Benchmark the OpenMP replicate kernel against the serial reference on a
// representative workload (token-system construction + evolution), and check
// the two produce identical results.

#include <chrono>
#include <cstdio>
#include <vector>

#include "mclab/measure.hpp"
#include "mclab/parallel.hpp"
#include "mclab/rate.hpp"
#include "mclab/rng.hpp"
#include "mclab/tokens.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

int main() {
    using namespace mclab;
    const MetricSpace space = MetricSpace::interval();
    const RateFunction phi = RateFunction::inverse_power(1.0);
    const InitialMeasure measure = InitialMeasure::uniform_box({{0.0}, {1.0}});
    const std::size_t replicates = 400;
    const std::uint64_t seed = 7;

    const auto workload = [&](std::size_t k) {
        RandomStream rng = child_stream(seed, k);
        const TokenSystem sys = TokenSystem::init(measure, 256, space, phi, rng);
        PartitionState st = evolve(sys, 0.5);
        return dust_fraction(st) + block_masses(st).front();
    };

    const auto time_it = [&](auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        auto result = fn();
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return std::make_pair(std::move(result), dt);
    };

    const auto [serial, serial_s] =
        time_it([&] { return run_replicates_serial<double>(replicates, workload); });
    const auto [parallel, parallel_s] =
        time_it([&] { return run_replicates_omp<double>(replicates, workload); });

    bool identical = serial.size() == parallel.size();
    for (std::size_t k = 0; identical && k < serial.size(); ++k) identical = serial[k] == parallel[k];

    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("replicates:      %zu\n", replicates);
    std::printf("serial:          %.3f s\n", serial_s);
    std::printf("openmp (%d thr): %.3f s\n", threads, parallel_s);
    std::printf("speedup:         %.2fx\n", serial_s / parallel_s);
    std::printf("bit-identical:   %s\n", identical ? "yes" : "NO");
    return identical ? 0 : 1;
}
