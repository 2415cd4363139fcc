#include "covertfbl/rng.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <thread>

namespace covertfbl::rng {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x51'7c'c1'b7'27'22'0a'95ULL));
}

std::uint64_t tag_from_double(double v) {
    return splitmix64(std::bit_cast<std::uint64_t>(v));
}

std::mt19937_64 chunk_engine(std::uint64_t seed, std::uint64_t chunk_index) {
    return std::mt19937_64(derive(seed, chunk_index));
}

namespace {
std::atomic<unsigned> g_threads{0};
}

unsigned thread_count() {
    unsigned n = g_threads.load();
    if (n == 0) {
        n = std::thread::hardware_concurrency();
        if (n == 0) n = 1;
    }
    return n;
}

void set_thread_count(unsigned n) { g_threads.store(n); }

void for_each_chunk(std::uint64_t total, std::uint64_t seed,
                    const std::function<void(std::uint64_t, std::mt19937_64&,
                                             std::uint64_t, std::uint64_t)>& fn) {
    if (total == 0) return;
    const std::uint64_t n_chunks = (total + kChunkSize - 1) / kChunkSize;
    const unsigned n_threads = static_cast<unsigned>(
        std::min<std::uint64_t>(thread_count(), n_chunks));

    auto work = [&](std::uint64_t c) {
        auto eng = chunk_engine(seed, c);
        const std::uint64_t first = c * kChunkSize;
        const std::uint64_t count = std::min<std::uint64_t>(kChunkSize, total - first);
        fn(c, eng, first, count);
    };

    if (n_threads <= 1) {
        for (std::uint64_t c = 0; c < n_chunks; ++c) work(c);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::uint64_t c = next.fetch_add(1);
                if (c >= n_chunks) break;
                work(c);
            }
        });
    }
    for (auto& th : pool) th.join();
}

MeanEstimate chunked_mean(std::uint64_t total, std::uint64_t seed,
                          const std::function<double(std::mt19937_64&)>& sample) {
    const std::uint64_t n_chunks = (total + kChunkSize - 1) / kChunkSize;
    std::vector<double> sums(n_chunks, 0.0), sq_sums(n_chunks, 0.0);
    for_each_chunk(total, seed,
                   [&](std::uint64_t c, std::mt19937_64& eng, std::uint64_t, std::uint64_t count) {
                       double s = 0.0, s2 = 0.0;
                       for (std::uint64_t i = 0; i < count; ++i) {
                           const double x = sample(eng);
                           s += x;
                           s2 += x * x;
                       }
                       sums[c] = s;
                       sq_sums[c] = s2;
                   });
    // combine in chunk order so the result is independent of thread count
    double s = 0.0, s2 = 0.0;
    for (std::uint64_t c = 0; c < n_chunks; ++c) {
        s += sums[c];
        s2 += sq_sums[c];
    }
    MeanEstimate out;
    out.count = total;
    if (total == 0) return out;
    out.mean = s / static_cast<double>(total);
    if (total > 1) {
        const double var =
            std::max(0.0, (s2 - s * s / static_cast<double>(total)) /
                              static_cast<double>(total - 1));
        out.half95 = 1.959963984540054 * std::sqrt(var / static_cast<double>(total));
    }
    return out;
}

Proportion wilson(std::uint64_t successes, std::uint64_t trials) {
    Proportion out;
    out.successes = successes;
    out.trials = trials;
    if (trials == 0) {
        out.p = 0.5;
        return out;
    }
    const double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2 * n)) / denom;
    const double rad = z * std::sqrt(p * (1.0 - p) / n + z2 / (4 * n * n)) / denom;
    out.p = p;
    out.lo = std::max(0.0, center - rad);
    out.hi = std::min(1.0, center + rad);
    return out;
}

}  // namespace covertfbl::rng
