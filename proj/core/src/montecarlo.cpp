#include "semigroup/montecarlo.hpp"

#include "semigroup/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace semigroup {

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

SampleMatrix collect_samples(std::size_t samples, std::size_t width, int workers, const SampleFn& fn) {
    if (samples == 0) throw ConfigError("samples must be positive");
    SampleMatrix out;
    out.samples = samples;
    out.width = width;
    out.data.assign(samples * width, 0.0);

    constexpr std::size_t kChunk = 64;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> aborted{0};
    std::mutex error_mutex;
    std::size_t error_index = samples;
    std::exception_ptr error;

    auto work = [&] {
        while (true) {
            const std::size_t begin = next.fetch_add(kChunk);
            if (begin >= samples) return;
            const std::size_t end = std::min(samples, begin + kChunk);
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    if (!fn(i, out.data.data() + i * width)) aborted.fetch_add(1);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (i < error_index) {
                        error_index = i;
                        error = std::current_exception();
                    }
                }
            }
        }
    };

    const int n = std::max(1, std::min<int>(resolve_workers(workers), static_cast<int>((samples + kChunk - 1) / kChunk)));
    if (n == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n);
        for (int w = 0; w < n; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    if (aborted.load() > 0) throw ExplosionError(aborted.load());
    return out;
}

double pairwise_sum(const double* data, std::size_t count, std::size_t stride) {
    if (count <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) s += data[i * stride];
        return s;
    }
    const std::size_t half = count / 2;
    return pairwise_sum(data, half, stride) + pairwise_sum(data + half * stride, count - half, stride);
}

MCEstimate summarize(const SampleMatrix& samples, std::uint64_t seed, std::size_t first, std::size_t count) {
    if (count == static_cast<std::size_t>(-1)) count = samples.width - first;
    MCEstimate est;
    est.samples = samples.samples;
    est.seed = seed;
    const std::size_t n = samples.samples;
    std::vector<double> dev(n);
    for (std::size_t c = first; c < first + count; ++c) {
        const double mean = pairwise_sum(samples.data.data() + c, n, samples.width) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = samples(i, c) - mean;
            dev[i] = d * d;
        }
        const double var = n > 1 ? pairwise_sum(dev.data(), n) / static_cast<double>(n - 1) : 0.0;
        est.mean.push_back(mean);
        est.std_error.push_back(std::sqrt(var / static_cast<double>(n)));
    }
    return est;
}

MCEstimate summarize_values(const std::vector<double>& values, std::uint64_t seed) {
    SampleMatrix m;
    m.samples = values.size();
    m.width = 1;
    m.data = values;
    return summarize(m, seed);
}

}  // namespace semigroup
