#pragma once

// One-pass moment accumulators and a deterministic blocked parallel
// reduction. Paths are split into fixed-size blocks whose boundaries do not
// depend on the thread count; blocks are merged in a fixed pairwise tree, so
// results are bit-identical for any parallelism.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace itolevy {

class MomentAccumulator {
public:
    void add(double x)
    {
        ++count_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (x - mean_);
    }

    void merge(const MomentAccumulator& other)
    {
        if (other.count_ == 0) {
            return;
        }
        if (count_ == 0) {
            *this = other;
            return;
        }
        const auto n = static_cast<double>(count_ + other.count_);
        const double delta = other.mean_ - mean_;
        mean_ += delta * static_cast<double>(other.count_) / n;
        m2_ += other.m2_ + delta * delta * static_cast<double>(count_) * static_cast<double>(other.count_) / n;
        count_ += other.count_;
    }

    std::uint64_t count() const { return count_; }
    double mean() const { return mean_; }
    double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
    /// Standard error of the mean.
    double se() const { return count_ > 1 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0; }

private:
    std::uint64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// A fixed set of moment statistics plus running maxima, merged elementwise.
struct Tally {
    std::vector<MomentAccumulator> moments;
    std::vector<double> maxima;

    Tally() = default;
    Tally(std::size_t nMoments, std::size_t nMaxima)
        : moments(nMoments)
        , maxima(nMaxima, 0.0)
    {
    }

    void raise(std::size_t i, double x)
    {
        // NaN must stick so that broken identities cannot pass
        if (std::isnan(x) || x > maxima[i]) {
            maxima[i] = std::isnan(maxima[i]) ? maxima[i] : x;
        }
    }

    void merge(const Tally& other)
    {
        for (std::size_t i = 0; i < moments.size(); ++i) {
            moments[i].merge(other.moments[i]);
        }
        for (std::size_t i = 0; i < maxima.size(); ++i) {
            raise(i, other.maxima[i]);
        }
    }
};

inline constexpr std::size_t kReductionBlock = 1024;

inline unsigned resolve_threads(unsigned requested)
{
    if (requested != 0) {
        return requested;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/**
 * Runs body(pathIndex, tally) for every path in [0, nPaths) and returns the
 * merged tally. Every block starts from a copy of `prototype`.
 */
template <class Body>
Tally reduce_paths(std::size_t nPaths, const Tally& prototype, unsigned threads, Body&& body)
{
    const std::size_t nBlocks = (nPaths + kReductionBlock - 1) / kReductionBlock;
    std::vector<Tally> blocks(nBlocks, prototype);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex errorMutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= nBlocks) {
                return;
            }
            try {
                const std::size_t end = std::min(nPaths, (b + 1) * kReductionBlock);
                for (std::size_t i = b * kReductionBlock; i < end; ++i) {
                    body(i, blocks[b]);
                }
            } catch (...) {
                std::lock_guard lock(errorMutex);
                if (!error) {
                    error = std::current_exception();
                }
                next.store(nBlocks);
                return;
            }
        }
    };

    const unsigned nThreads = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(nBlocks, 1));
    if (nThreads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(nThreads);
        for (unsigned t = 0; t < nThreads; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }

    if (blocks.empty()) {
        return prototype;
    }
    for (std::size_t width = 1; width < blocks.size(); width *= 2) {
        for (std::size_t i = 0; i + width < blocks.size(); i += 2 * width) {
            blocks[i].merge(blocks[i + width]);
        }
    }
    return blocks.front();
}

} // namespace itolevy
