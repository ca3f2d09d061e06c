#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace utweak {

/// Worker count used when a caller passes 0: UTWEAK_THREADS if set, else the
/// hardware concurrency.
int default_threads();
/// Overrides the process-wide default (0 restores the environment lookup).
void set_default_threads(int n);

/// Mean and centred second moment, merged with Chan's update so that the
/// result depends only on the order of merges.
struct RunningStats {
    double n = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        n += 1.0;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    void merge(const RunningStats& o) {
        if (o.n == 0.0) return;
        if (n == 0.0) {
            *this = o;
            return;
        }
        const double total = n + o.n;
        const double d = o.mean - mean;
        mean += d * (o.n / total);
        m2 += o.m2 + d * d * (n * o.n / total);
        n = total;
    }
    double variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
    /// Standard error of the mean: sample std / sqrt(n).
    double stderr_mean() const { return n > 1.0 ? std::sqrt(variance() / n) : 0.0; }
};

/// Paths are cut into fixed blocks; block accumulators are merged in block
/// order, so results do not depend on the number of workers.
inline constexpr int kBlockSize = 256;

/// Runs body(acc, path) for every path in [0, n_paths), one accumulator per
/// block, and returns the accumulators in block order.
template <class Acc>
std::vector<Acc> run_blocks(long n_paths, const std::function<Acc()>& make,
                            const std::function<void(Acc&, long)>& body, int threads = 0) {
    const long n_blocks = (n_paths + kBlockSize - 1) / kBlockSize;
    std::vector<Acc> accs;
    accs.reserve(static_cast<std::size_t>(n_blocks));
    for (long b = 0; b < n_blocks; ++b) accs.push_back(make());
    if (threads <= 0) threads = default_threads();
    threads = static_cast<int>(std::min<long>(threads, std::max<long>(n_blocks, 1)));

    std::atomic<long> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const long b = next.fetch_add(1);
            if (b >= n_blocks) return;
            try {
                const long end = std::min(n_paths, (b + 1) * kBlockSize);
                for (long p = b * kBlockSize; p < end; ++p) body(accs[static_cast<std::size_t>(b)], p);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_blocks);
                return;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return accs;
}

}  // namespace utweak
