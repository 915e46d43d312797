#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mclab {

// Replicate ensembles are the data-parallel kernel of this project. Both
// runners fill a replicate-indexed vector, so any downstream reduction that
// walks the vector in index order is independent of thread count. The serial
// runner is the reference implementation; test_parallel checks the OpenMP
// runner reproduces it bit-exactly and tools/bench_replicates compares them.

template <class T, class Fn>
std::vector<T> run_replicates_serial(std::size_t count, Fn&& fn) {
    std::vector<T> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = fn(k);
    return out;
}

template <class T, class Fn>
std::vector<T> run_replicates_omp(std::size_t count, Fn&& fn, int threads = 0) {
    std::vector<T> out(count);
#ifdef _OPENMP
    // exceptions cannot unwind out of a parallel region: stash the first one
    // and rethrow after the loop
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    const auto body = [&](long long k) {
        if (failed.load(std::memory_order_relaxed)) return;
        try {
            out[static_cast<std::size_t>(k)] = fn(static_cast<std::size_t>(k));
        } catch (...) {
            if (!failed.exchange(true)) error = std::current_exception();
        }
    };
    if (threads > 0) {
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
        for (long long k = 0; k < static_cast<long long>(count); ++k) body(k);
    } else {
#pragma omp parallel for schedule(dynamic, 16)
        for (long long k = 0; k < static_cast<long long>(count); ++k) body(k);
    }
    if (failed.load()) std::rethrow_exception(error);
#else
    (void)threads;
    for (std::size_t k = 0; k < count; ++k) out[k] = fn(k);
#endif
    return out;
}

// threads < 0 selects the serial reference path
template <class T, class Fn>
std::vector<T> run_replicates(std::size_t count, Fn&& fn, int threads = 0) {
    if (threads < 0) return run_replicates_serial<T>(count, fn);
    return run_replicates_omp<T>(count, fn, threads);
}

struct MeanVar {
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;  // sum of squared deviations

    double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
    double stderr_of_mean() const {
        return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
    }
};

inline MeanVar combine(const MeanVar& a, const MeanVar& b) {
    if (a.count == 0) return b;
    if (b.count == 0) return a;
    MeanVar r;
    r.count = a.count + b.count;
    const double delta = b.mean - a.mean;
    const double na = static_cast<double>(a.count);
    const double nb = static_cast<double>(b.count);
    r.mean = a.mean + delta * nb / (na + nb);
    r.m2 = a.m2 + b.m2 + delta * delta * na * nb / (na + nb);
    return r;
}

// Pairwise-tree reduction over a replicate-indexed array: numerically stable
// and structurally fixed, so the result does not depend on thread count.
inline MeanVar pairwise_mean_var(std::span<const double> values) {
    if (values.empty()) return {};
    if (values.size() == 1) return {1, values[0], 0.0};
    const std::size_t half = values.size() / 2;
    return combine(pairwise_mean_var(values.subspan(0, half)), pairwise_mean_var(values.subspan(half)));
}

}  // namespace mclab
