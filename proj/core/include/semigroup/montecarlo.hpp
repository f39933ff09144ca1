#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace semigroup {

/// Sample mean of a scalar or vector quantity with its standard error
/// (sample standard deviation / sqrt(samples)).
struct MCEstimate {
    std::vector<double> mean;
    std::vector<double> std_error;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    std::size_t aborted_paths = 0;

    std::size_t dim() const { return mean.size(); }
    double value(std::size_t i = 0) const { return mean.at(i); }
    double se(std::size_t i = 0) const { return std_error.at(i); }
    std::pair<double, double> ci95(std::size_t i = 0) const {
        return {mean.at(i) - 1.96 * std_error.at(i), mean.at(i) + 1.96 * std_error.at(i)};
    }
};

/// Per-path results, row-major: samples x width.
struct SampleMatrix {
    std::size_t samples = 0;
    std::size_t width = 0;
    std::vector<double> data;

    double operator()(std::size_t path, std::size_t column) const { return data[path * width + column]; }
    const double* row(std::size_t path) const { return data.data() + path * width; }
};

/// Computes the values of one path into `out` (width entries). Returns false
/// when the path left the safe region.
using SampleFn = std::function<bool(std::size_t path, double* out)>;

/// Resolves a worker count; 0 means available hardware parallelism.
int resolve_workers(int requested);

/// Evaluates fn for paths 0..samples-1 on a pool of workers. Results are
/// stored by path index, so they do not depend on the worker count. If any
/// path exploded, throws ExplosionError with the number of aborted paths; if
/// fn throws, the exception of the smallest failing path index is rethrown.
SampleMatrix collect_samples(std::size_t samples, std::size_t width, int workers, const SampleFn& fn);

/// Pairwise (cascade) summation with a fixed split order.
double pairwise_sum(const double* data, std::size_t count, std::size_t stride = 1);

/// Means and standard errors of columns [first, first + count).
MCEstimate summarize(const SampleMatrix& samples, std::uint64_t seed, std::size_t first = 0,
                     std::size_t count = static_cast<std::size_t>(-1));

/// Mean and standard error of a derived per-path scalar.
MCEstimate summarize_values(const std::vector<double>& values, std::uint64_t seed);

}  // namespace semigroup
